// End-to-end tests that drive the installed binary exactly like a user would:
// through a shell, checking exit codes and on-disk artifacts.

#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <gridguard/gridguard.hpp>

#include "test_support.hpp"

using namespace gridguard;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr interleaved
};

CliResult run_cli(const std::string& args, const std::filesystem::path& capture_dir) {
    static int counter = 0;
    auto capture = capture_dir / ("cli-out-" + std::to_string(counter++) + ".txt");
    std::string cmd = std::string("\"") + GRIDGUARD_CLI_PATH + "\" " + args + " > \"" +
                      capture.string() + "\" 2>&1";
    int raw = std::system(cmd.c_str());
    CliResult res;
    res.exit_code = (raw >= 0 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
    std::ifstream f(capture);
    res.output.assign((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return res;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

constexpr const char* kSignerSeedHex =
    "00112233445566778899aabbccddeeff00112233445566778899aabbccddeeff";

std::string signer_pub_hex() {
    auto kp = crypto::keypair_from_seed(from_hex(kSignerSeedHex));
    return to_hex(kp.public_key);
}

}  // namespace

TEST_CASE("run executes the scenario, writes artifacts, and reports containment") {
    TempDir tmp;
    auto out = tmp.path("out");
    auto res = run_cli("run --config " + q(fixtures_dir() + "/golden_config.json") +
                           " --seed 42 --out " + q(out),
                       tmp.path(""));
    INFO(res.output);
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("phase_a contained: true") != std::string::npos);
    CHECK(res.output.find("phase_b contained: true") != std::string::npos);
    CHECK(res.output.find("phase_c contained: true") != std::string::npos);
    CHECK(res.output.find("signature emitted: true") != std::string::npos);

    REQUIRE(std::filesystem::exists(out / "report.json"));
    REQUIRE(std::filesystem::exists(out / "audit.jsonl"));
    REQUIRE(std::filesystem::exists(out / "grid_trace.csv"));

    auto report = nlohmann::json::parse(read_text_file((out / "report.json").string()));
    CHECK(report.at("phase_c").at("violation_factor").get<long>() == 186);
    CHECK(report.at("deterministic_seed").get<std::uint64_t>() == 42);
}

TEST_CASE("two runs with the same seed produce byte-identical artifacts") {
    TempDir tmp;
    auto config = q(fixtures_dir() + "/golden_config.json");
    auto r1 = run_cli("run --config " + config + " --seed 7 --out " + q(tmp.path("a")),
                      tmp.path(""));
    auto r2 = run_cli("run --config " + config + " --seed 7 --out " + q(tmp.path("b")),
                      tmp.path(""));
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    CHECK(read_text_file(tmp.path("a/report.json").string()) ==
          read_text_file(tmp.path("b/report.json").string()));
    CHECK(read_text_file(tmp.path("a/audit.jsonl").string()) ==
          read_text_file(tmp.path("b/audit.jsonl").string()));
    CHECK(read_text_file(tmp.path("a/grid_trace.csv").string()) ==
          read_text_file(tmp.path("b/grid_trace.csv").string()));
}

TEST_CASE("replay-report rebuilds the identical report from saved artifacts") {
    TempDir tmp;
    auto out = tmp.path("out");
    REQUIRE(run_cli("run --config " + q(fixtures_dir() + "/golden_config.json") +
                        " --seed 42 --out " + q(out),
                    tmp.path(""))
                .exit_code == 0);

    auto replayed = tmp.path("replayed.json");
    auto res = run_cli("replay-report --audit " + q(out / "audit.jsonl") + " --trace " +
                           q(out / "grid_trace.csv") + " --seed 42 --out " + q(replayed),
                       tmp.path(""));
    INFO(res.output);
    REQUIRE(res.exit_code == 0);
    CHECK(read_text_file(replayed.string()) == read_text_file((out / "report.json").string()));
}

TEST_CASE("run distinguishes config errors from containment failures") {
    TempDir tmp;

    auto missing = run_cli("run --config " + q(tmp.path("nope.json")) + " --seed 1 --out " +
                               q(tmp.path("out")),
                           tmp.path(""));
    CHECK(missing.exit_code == 3);
    CHECK(missing.output.find("config error") != std::string::npos);

    // A config whose physics stage is disabled lets the poisoned batch
    // through: the run completes but reports the containment failure.
    auto cfg = nlohmann::json::parse(read_text_file(fixtures_dir() + "/golden_config.json"));
    cfg["ingest"]["physics_check_enabled"] = false;
    write_text_file(tmp.path("no_physics.json").string(), cfg.dump(2));
    auto leaked = run_cli("run --config " + q(tmp.path("no_physics.json")) + " --seed 42 --out " +
                              q(tmp.path("out2")),
                          tmp.path(""));
    CHECK(leaked.exit_code == 2);
    CHECK(leaked.output.find("phase_a contained: false") != std::string::npos);
}

TEST_CASE("sign-artifact then verify-artifact round-trips through JSON on disk") {
    TempDir tmp;
    write_text_file(tmp.path("model.bin").string(), "weights: 1 -2 bias 0");
    auto artifact = tmp.path("artifact.json");

    auto signed_res = run_cli(
        "sign-artifact --content " + q(tmp.path("model.bin")) +
            " --manifest model_name=freq-forecaster --manifest version=1.4.0 --created-at 1000" +
            " --signer-seed " + kSignerSeedHex +
            " --signer-id ci-bot --ci-run-id run-1 --signed-at 2000 --out " + q(artifact),
        tmp.path(""));
    INFO(signed_res.output);
    REQUIRE(signed_res.exit_code == 0);
    // Prints the digest: 64 hex chars on the first line.
    REQUIRE(signed_res.output.size() >= 65);
    CHECK(signed_res.output.find('\n') == 64);

    auto ok = run_cli("verify-artifact --artifact " + q(artifact) + " --signer-pub " +
                          signer_pub_hex(),
                      tmp.path(""));
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.rfind("verified ", 0) == 0);

    // Tamper with the stored JSON: verification must fail with exit 1.
    auto j = nlohmann::json::parse(read_text_file(artifact.string()));
    j["manifest"]["version"] = "6.6.6";
    write_text_file(tmp.path("tampered.json").string(), j.dump(2));
    auto bad = run_cli("verify-artifact --artifact " + q(tmp.path("tampered.json")) +
                           " --signer-pub " + signer_pub_hex(),
                       tmp.path(""));
    CHECK(bad.exit_code == 1);

    // Wrong public key also fails.
    auto other = crypto::keypair_from_seed(Bytes(32, 0x99));
    auto wrong_key = run_cli("verify-artifact --artifact " + q(artifact) + " --signer-pub " +
                                 to_hex(other.public_key),
                             tmp.path(""));
    CHECK(wrong_key.exit_code == 1);
}

TEST_CASE("registry CLI enforces write-once storage end to end") {
    TempDir tmp;
    write_text_file(tmp.path("model.bin").string(), "model-bytes-v1");
    auto artifact = tmp.path("artifact.json");
    REQUIRE(run_cli("sign-artifact --content " + q(tmp.path("model.bin")) +
                        " --manifest model_name=m --manifest version=1 --created-at 5" +
                        " --signer-seed " + kSignerSeedHex +
                        " --signer-id ci --ci-run-id r1 --signed-at 6 --out " + q(artifact),
                    tmp.path(""))
                .exit_code == 0);

    auto registry = q(tmp.path("registry"));
    auto put1 = run_cli("registry-put --registry " + registry + " --artifact " + q(artifact) +
                            " --signer-pub " + signer_pub_hex() + " --now 10",
                        tmp.path(""));
    INFO(put1.output);
    REQUIRE(put1.exit_code == 0);
    std::string digest = put1.output.substr(0, 64);

    // Idempotent identical re-put.
    auto put2 = run_cli("registry-put --registry " + registry + " --artifact " + q(artifact) +
                            " --signer-pub " + signer_pub_hex() + " --now 11",
                        tmp.path(""));
    CHECK(put2.exit_code == 0);
    CHECK(put2.output.find("already present") != std::string::npos);

    // Same content re-signed at a different time: same digest, different
    // record bytes, so the write-once rule rejects it.
    auto conflict_artifact = tmp.path("conflict.json");
    REQUIRE(run_cli("sign-artifact --content " + q(tmp.path("model.bin")) +
                        " --manifest model_name=m --manifest version=1 --created-at 5" +
                        " --signer-seed " + kSignerSeedHex +
                        " --signer-id ci --ci-run-id r2 --signed-at 7 --out " +
                        q(conflict_artifact),
                    tmp.path(""))
                .exit_code == 0);
    auto put3 = run_cli("registry-put --registry " + registry + " --artifact " +
                            q(conflict_artifact) + " --signer-pub " + signer_pub_hex() +
                            " --now 12",
                        tmp.path(""));
    CHECK(put3.exit_code == 1);
    CHECK(put3.output.find("already stored with different bytes") != std::string::npos);

    // Fetch what was stored and confirm it matches the original JSON.
    auto fetched = tmp.path("fetched.json");
    auto get = run_cli("registry-get --registry " + registry + " --digest " + digest + " --out " +
                           q(fetched),
                       tmp.path(""));
    REQUIRE(get.exit_code == 0);
    CHECK(nlohmann::json::parse(read_text_file(fetched.string())) ==
          nlohmann::json::parse(read_text_file(artifact.string())));

    // Unknown digest: not found.
    auto missing = run_cli("registry-get --registry " + registry + " --digest " +
                               std::string(64, 'f') + " --out " + q(tmp.path("x.json")),
                           tmp.path(""));
    CHECK(missing.exit_code == 1);

    // A forged artifact (signed by a different key) is rejected on put.
    auto forged = tmp.path("forged.json");
    REQUIRE(run_cli("sign-artifact --content " + q(tmp.path("model.bin")) +
                        " --manifest model_name=m --manifest version=2 --created-at 5" +
                        " --signer-seed " + std::string(64, '9') +
                        " --signer-id mallory --ci-run-id r9 --signed-at 8 --out " + q(forged),
                    tmp.path(""))
                .exit_code == 0);
    auto put4 = run_cli("registry-put --registry " + registry + " --artifact " + q(forged) +
                            " --signer-pub " + signer_pub_hex() + " --now 13",
                        tmp.path(""));
    CHECK(put4.exit_code == 1);
}

TEST_CASE("gate passes and fails with its documented exit codes") {
    TempDir tmp;
    auto cand = q(fixtures_dir() + "/gate_candidate.json");
    auto base = q(fixtures_dir() + "/gate_baseline.json");

    // Fixture pair encodes the accuracy-robustness tradeoff: fail, exit 4.
    auto fail = run_cli("gate --candidate " + cand + " --baseline " + base, tmp.path(""));
    CHECK(fail.exit_code == 4);
    CHECK(fail.output.find("gate: fail (accuracy-robustness tradeoff)") != std::string::npos);

    // A candidate better on both axes passes.
    write_text_file(tmp.path("good.json").string(),
                    R"({"clean_accuracy": 0.95, "robust_accuracy": 0.85, "epsilon": 0.3})");
    auto pass = run_cli("gate --candidate " + q(tmp.path("good.json")) + " --baseline " + base,
                        tmp.path(""));
    CHECK(pass.exit_code == 0);
    CHECK(pass.output.find("gate: pass") != std::string::npos);

    // The robust floor applies through the CLI flag.
    auto floored = run_cli("gate --candidate " + q(tmp.path("good.json")) + " --baseline " + base +
                               " --min-robust 0.9",
                           tmp.path(""));
    CHECK(floored.exit_code == 4);
    CHECK(floored.output.find("robust floor") != std::string::npos);

    // Unreadable or mismatched inputs: exit 3.
    auto unreadable = run_cli("gate --candidate " + q(tmp.path("absent.json")) + " --baseline " +
                                  base,
                              tmp.path(""));
    CHECK(unreadable.exit_code == 3);

    write_text_file(tmp.path("other_eps.json").string(),
                    R"({"clean_accuracy": 0.95, "robust_accuracy": 0.85, "epsilon": 0.5})");
    auto mismatched = run_cli("gate --candidate " + q(tmp.path("other_eps.json")) +
                                  " --baseline " + base,
                              tmp.path(""));
    CHECK(mismatched.exit_code == 3);
}

TEST_CASE("usage errors exit 64 with help text") {
    TempDir tmp;
    auto no_sub = run_cli("", tmp.path(""));
    CHECK(no_sub.exit_code == 64);

    auto unknown_flag = run_cli("run --config x --seed 1 --out y --frobnicate", tmp.path(""));
    CHECK(unknown_flag.exit_code == 64);

    auto missing_flag = run_cli("run --seed 1", tmp.path(""));
    CHECK(missing_flag.exit_code == 64);
    CHECK(missing_flag.output.find("--config") != std::string::npos);

    auto unknown_sub = run_cli("frobnicate", tmp.path(""));
    CHECK(unknown_sub.exit_code == 64);

    auto help = run_cli("--help", tmp.path(""));
    CHECK(help.exit_code == 0);
    CHECK(help.output.find("run") != std::string::npos);
}
