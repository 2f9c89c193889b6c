// Grid-Guard command-line driver.
//
// Exit codes:
//   run:             0 all phases contained, 2 containment failure, 3 config error
//   gate:            0 pass, 4 fail, 3 unreadable/invalid inputs
//   verify-artifact: 0 verified, 1 verification failure
//   registry-get:    0 found, 1 not found
//   registry-put:    0 stored (or idempotent re-put), 1 rejected
//   sign-artifact:   0 signed, 1 invalid artifact inputs
//   replay-report:   0 report written, 1 unreadable inputs
//   any subcommand:  64 on usage errors (unknown/missing flags)

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <gridguard/gridguard.hpp>

namespace {

using gridguard::Bytes;

Bytes read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw gridguard::Error(gridguard::ErrorCode::IoError, "cannot open file: " + path);
    return Bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw gridguard::Error(gridguard::ErrorCode::IoError, "cannot open file: " + path);
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw gridguard::Error(gridguard::ErrorCode::ParseError, path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw gridguard::Error(gridguard::ErrorCode::IoError, "cannot write file: " + path);
    f << text;
}

Bytes parse_hex_or_die(const std::string& hex, std::size_t expect_len, const std::string& what) {
    Bytes b;
    try {
        b = gridguard::from_hex(hex);
    } catch (const gridguard::Error&) {
        b.clear();
    }
    if (b.size() != expect_len)
        throw gridguard::Error(gridguard::ErrorCode::ConfigError,
                               what + " must be " + std::to_string(expect_len * 2) +
                                   " hex characters");
    return b;
}

gridguard::RobustnessReport report_from_json_file(const std::string& path) {
    auto j = read_json_file(path);
    gridguard::RobustnessReport r;
    try {
        r.clean_accuracy = j.at("clean_accuracy").get<double>();
        r.robust_accuracy = j.at("robust_accuracy").get<double>();
        r.epsilon = j.at("epsilon").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw gridguard::Error(gridguard::ErrorCode::ParseError, path + ": " + e.what());
    }
    return r;
}

int cmd_run(const std::string& config_path, std::uint64_t seed, const std::string& out_dir) {
    gridguard::ScenarioConfig cfg;
    try {
        cfg = gridguard::ScenarioConfig::load(config_path);
    } catch (const gridguard::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    }
    gridguard::RunResult res = gridguard::write_outputs(cfg, seed, out_dir);
    std::cout << "report: " << (std::filesystem::path(out_dir) / "report.json").string() << "\n"
              << "phase_a contained: " << (res.report.phase_a.contained ? "true" : "false") << "\n"
              << "phase_b contained: " << (res.report.phase_b.contained ? "true" : "false") << "\n"
              << "phase_c contained: " << (res.report.phase_c.contained ? "true" : "false") << "\n"
              << "signature emitted: "
              << (res.report.correlation.signature_emitted ? "true" : "false") << "\n";
    return res.report.all_contained() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grid-Guard: lifecycle security simulator for AI-operated power grids"};
    app.require_subcommand(1);

    // --- run ---
    std::string run_config, run_out;
    std::uint64_t run_seed = 0;
    auto* run = app.add_subcommand("run", "Execute the scenario and write report/audit/trace");
    run->add_option("--config", run_config, "Scenario config JSON")->required();
    run->add_option("--seed", run_seed, "Deterministic seed")->required();
    run->add_option("--out", run_out, "Output directory")->required();

    // --- sign-artifact ---
    std::string sa_content, sa_out, sa_seed_hex, sa_signer_id, sa_ci_run;
    std::vector<std::string> sa_manifest;
    std::int64_t sa_created_at = 0, sa_now = 0;
    auto* sign = app.add_subcommand("sign-artifact", "Sign a model artifact into portable JSON");
    sign->add_option("--content", sa_content, "Model content file")->required();
    sign->add_option("--manifest", sa_manifest, "Manifest entries as key=value (repeatable)");
    sign->add_option("--created-at", sa_created_at, "Artifact creation time (epoch ms)")
        ->required();
    sign->add_option("--signer-seed", sa_seed_hex, "Signer key seed (64 hex chars)")->required();
    sign->add_option("--signer-id", sa_signer_id, "Signer identity")->required();
    sign->add_option("--ci-run-id", sa_ci_run, "CI run identifier")->required();
    sign->add_option("--signed-at", sa_now, "Signing time (epoch ms)");
    sign->add_option("--out", sa_out, "Output JSON path ('-' for stdout)")->required();

    // --- verify-artifact ---
    std::string va_artifact, va_pub_hex;
    auto* verify = app.add_subcommand("verify-artifact", "Verify a signed artifact JSON");
    verify->add_option("--artifact", va_artifact, "Signed artifact JSON")->required();
    verify->add_option("--signer-pub", va_pub_hex, "Signer public key (64 hex chars)")->required();

    // --- registry-put ---
    std::string rp_dir, rp_artifact, rp_pub_hex;
    std::int64_t rp_now = 0;
    auto* rput = app.add_subcommand("registry-put", "Store a signed artifact, write-once");
    rput->add_option("--registry", rp_dir, "Registry directory")->required();
    rput->add_option("--artifact", rp_artifact, "Signed artifact JSON")->required();
    rput->add_option("--signer-pub", rp_pub_hex, "Trusted signer public key (64 hex chars)")
        ->required();
    rput->add_option("--now", rp_now, "Store time (epoch ms)");

    // --- registry-get ---
    std::string rg_dir, rg_digest, rg_out;
    auto* rget = app.add_subcommand("registry-get", "Fetch a stored artifact by digest");
    rget->add_option("--registry", rg_dir, "Registry directory")->required();
    rget->add_option("--digest", rg_digest, "Artifact digest (64 hex chars)")->required();
    rget->add_option("--out", rg_out, "Output JSON path ('-' for stdout)")->required();

    // --- gate ---
    std::string gate_cand, gate_base;
    double gate_min_robust = 0.0;
    auto* gate = app.add_subcommand("gate", "Robustness gate over two evaluation reports");
    gate->add_option("--candidate", gate_cand, "Candidate robustness report JSON")->required();
    gate->add_option("--baseline", gate_base, "Baseline robustness report JSON")->required();
    gate->add_option("--min-robust", gate_min_robust, "Absolute robust-accuracy floor");

    // --- replay-report ---
    std::string rr_audit, rr_trace, rr_out;
    std::uint64_t rr_seed = 0;
    auto* replay = app.add_subcommand("replay-report", "Rebuild the report from saved artifacts");
    replay->add_option("--audit", rr_audit, "Audit log JSONL")->required();
    replay->add_option("--trace", rr_trace, "Grid trace CSV")->required();
    replay->add_option("--seed", rr_seed, "Seed the run was executed with")->required();
    replay->add_option("--out", rr_out, "Output JSON path ('-' for stdout)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 64;
    }

    try {
        if (run->parsed()) return cmd_run(run_config, run_seed, run_out);

        if (sign->parsed()) {
            gridguard::ModelArtifact a;
            a.content = read_file_bytes(sa_content);
            for (const auto& kv : sa_manifest) {
                auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw gridguard::Error(gridguard::ErrorCode::ConfigError,
                                           "--manifest entries must be key=value: " + kv);
                a.manifest[kv.substr(0, eq)] = kv.substr(eq + 1);
            }
            a.created_at = sa_created_at;
            auto kp = gridguard::crypto::keypair_from_seed(
                parse_hex_or_die(sa_seed_hex, 32, "--signer-seed"));
            auto sa = gridguard::sign_artifact(a, kp.secret_key, sa_signer_id, sa_ci_run, sa_now);
            write_text_file(sa_out, gridguard::signed_artifact_to_json(sa).dump(2) + "\n");
            std::cout << sa.digest << "\n";
            return 0;
        }

        if (verify->parsed()) {
            auto sa = gridguard::signed_artifact_from_json(read_json_file(va_artifact));
            Bytes pub = parse_hex_or_die(va_pub_hex, 32, "--signer-pub");
            if (gridguard::verify_artifact(sa, pub)) {
                std::cout << "verified " << sa.digest << "\n";
                return 0;
            }
            std::cerr << "verification failed for " << va_artifact << "\n";
            return 1;
        }

        if (rput->parsed()) {
            auto sa = gridguard::signed_artifact_from_json(read_json_file(rp_artifact));
            gridguard::Registry reg(rp_dir, parse_hex_or_die(rp_pub_hex, 32, "--signer-pub"));
            auto receipt = reg.put(sa, rp_now);
            std::cout << receipt.digest << (receipt.already_present ? " (already present)" : "")
                      << "\n";
            return 0;
        }

        if (rget->parsed()) {
            gridguard::Registry reg(rg_dir, Bytes(32, 0));  // key unused for reads
            auto sa = reg.get(rg_digest);
            write_text_file(rg_out, gridguard::signed_artifact_to_json(sa).dump(2) + "\n");
            return 0;
        }

        if (gate->parsed()) {
            gridguard::GateResult res;
            try {
                auto cand = report_from_json_file(gate_cand);
                auto base = report_from_json_file(gate_base);
                res = gridguard::robustness_gate(cand, base, gate_min_robust);
            } catch (const gridguard::Error& e) {
                std::cerr << "gate input error: " << e.what() << "\n";
                return 3;
            }
            if (res.pass) {
                std::cout << "gate: pass\n";
                return 0;
            }
            std::cout << "gate: fail (" << res.reason << ")\n";
            return 4;
        }

        if (replay->parsed()) {
            auto log = gridguard::AuditLog::read_jsonl(rr_audit);
            auto trace = gridguard::read_grid_trace(rr_trace);
            auto report = gridguard::replay_report(log, trace, rr_seed);
            write_text_file(rr_out, report.to_json_text());
            return 0;
        }
    } catch (const gridguard::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 64;
}
