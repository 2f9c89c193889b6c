#include <map>
#include <random>

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <gridguard/audit.hpp>
#include <gridguard/supplychain.hpp>

#include "test_support.hpp"

using namespace gridguard;

namespace {

ModelArtifact sample_artifact() {
    ModelArtifact a;
    a.content = to_bytes(std::string("model weights v1: [0.1, 0.2, 0.3]"));
    a.manifest = {{"model_name", "freq-forecaster"}, {"version", "1.4.0"}, {"framework", "linear"}};
    a.created_at = 1723500000000;
    return a;
}

struct SignerFixture {
    crypto::SigningKeypair signer = crypto::keypair_from_seed(Bytes(32, 0x44));
    crypto::SigningKeypair other = crypto::keypair_from_seed(Bytes(32, 0x55));
};

LinearModel toy_model_from_json(const nlohmann::json& j) {
    LinearModel m;
    m.weights = j.at("model").at("weights").get<std::vector<double>>();
    m.bias = j.at("model").at("bias").get<double>();
    return m;
}

std::vector<LabeledSample> toy_samples_from_json(const nlohmann::json& j) {
    std::vector<LabeledSample> out;
    for (const auto& s : j.at("samples"))
        out.push_back({s.at("x").get<std::vector<double>>(), s.at("label").get<int>()});
    return out;
}

}  // namespace

// --- digests and signatures -------------------------------------------------

TEST_CASE("artifact digest is stable and insensitive to manifest insertion order") {
    auto a = sample_artifact();
    std::string d1 = artifact_digest(a);
    CHECK(d1.size() == 64);
    CHECK(artifact_digest(a) == d1);  // repeatable

    ModelArtifact b;
    b.content = a.content;
    b.created_at = a.created_at;
    // Insert in reverse order; the canonical form sorts keys.
    b.manifest.emplace("version", "1.4.0");
    b.manifest.emplace("model_name", "freq-forecaster");
    b.manifest.emplace("framework", "linear");
    CHECK(artifact_digest(b) == d1);

    auto changed = a;
    changed.manifest["version"] = "1.4.1";
    CHECK(artifact_digest(changed) != d1);
    auto later = a;
    later.created_at += 1;
    CHECK(artifact_digest(later) != d1);
}

TEST_CASE("artifact validation rejects malformed inputs") {
    ModelArtifact empty;
    empty.manifest = {{"model_name", "m"}, {"version", "1"}};
    CHECK_THROWS_MATCHES(artifact_digest(empty), Error, ErrorCodeIs(ErrorCode::InvalidArtifact));

    auto missing = sample_artifact();
    missing.manifest.erase("version");
    CHECK_THROWS_MATCHES(artifact_digest(missing), Error, ErrorCodeIs(ErrorCode::InvalidArtifact));

    auto bad_key = sample_artifact();
    bad_key.manifest["a=b"] = "x";
    CHECK_THROWS_MATCHES(artifact_digest(bad_key), Error, ErrorCodeIs(ErrorCode::InvalidArtifact));

    auto bad_value = sample_artifact();
    bad_value.manifest["note"] = "line1\nline2";
    CHECK_THROWS_MATCHES(artifact_digest(bad_value), Error, ErrorCodeIs(ErrorCode::InvalidArtifact));
}

TEST_CASE_METHOD(SignerFixture, "signed artifacts verify and every field is tamper-evident") {
    auto sa = sign_artifact(sample_artifact(), signer.secret_key, "ci-bot", "run-991", 1723500001000);
    CHECK(sa.digest == artifact_digest(sa.artifact));
    CHECK(verify_artifact(sa, signer.public_key));
    CHECK_FALSE(verify_artifact(sa, other.public_key));

    auto content = sa;
    content.artifact.content[0] ^= 0x01;
    CHECK_FALSE(verify_artifact(content, signer.public_key));

    auto manifest = sa;
    manifest.artifact.manifest["version"] = "9.9.9";
    CHECK_FALSE(verify_artifact(manifest, signer.public_key));

    auto created = sa;
    created.artifact.created_at += 1;
    CHECK_FALSE(verify_artifact(created, signer.public_key));

    auto digest = sa;
    digest.digest[0] = digest.digest[0] == 'a' ? 'b' : 'a';
    CHECK_FALSE(verify_artifact(digest, signer.public_key));

    auto sig = sa;
    sig.signature[10] ^= 0xff;
    CHECK_FALSE(verify_artifact(sig, signer.public_key));
}

TEST_CASE_METHOD(SignerFixture, "signed artifacts round-trip through bytes and JSON") {
    auto sa = sign_artifact(sample_artifact(), signer.secret_key, "ci-bot", "run-991", 1723500001000);

    auto from_bytes = SignedArtifact::from_bytes(sa.to_bytes());
    CHECK(from_bytes.to_bytes() == sa.to_bytes());
    CHECK(verify_artifact(from_bytes, signer.public_key));

    auto from_json = signed_artifact_from_json(signed_artifact_to_json(sa));
    CHECK(from_json.to_bytes() == sa.to_bytes());

    Bytes truncated = sa.to_bytes();
    truncated.resize(truncated.size() - 3);
    CHECK_THROWS_MATCHES(SignedArtifact::from_bytes(truncated), Error,
                         ErrorCodeIs(ErrorCode::ParseError));
}

// --- registry -----------------------------------------------------------------

TEST_CASE_METHOD(SignerFixture, "registry is write-once with idempotent identical re-puts") {
    TempDir tmp;
    Registry reg(tmp.path("registry"), signer.public_key);
    auto sa = sign_artifact(sample_artifact(), signer.secret_key, "ci-bot", "run-991", 1000);

    auto first = reg.put(sa, 2000);
    CHECK(first.digest == sa.digest);
    CHECK_FALSE(first.already_present);

    auto again = reg.put(sa, 3000);
    CHECK(again.already_present);

    auto fetched = reg.get(sa.digest);
    CHECK(fetched.to_bytes() == sa.to_bytes());
    CHECK(verify_artifact(fetched, signer.public_key));

    // Same digestable content, different provenance: different stored bytes.
    auto conflicting = sign_artifact(sample_artifact(), signer.secret_key, "ci-bot", "run-992", 1001);
    REQUIRE(conflicting.digest == sa.digest);
    CHECK_THROWS_MATCHES(reg.put(conflicting, 4000), Error,
                         ErrorCodeIs(ErrorCode::ImmutableViolation));

    // The stored object is untouched by the failed overwrite.
    CHECK(reg.get(sa.digest).to_bytes() == sa.to_bytes());
}

TEST_CASE_METHOD(SignerFixture, "registry re-verifies before storing") {
    TempDir tmp;
    Registry reg(tmp.path("registry"), signer.public_key);

    auto forged = sign_artifact(sample_artifact(), other.secret_key, "mallory", "run-1", 1000);
    CHECK_THROWS_MATCHES(reg.put(forged, 2000), Error,
                         ErrorCodeIs(ErrorCode::UnverifiableArtifact));

    auto lying_digest = sign_artifact(sample_artifact(), signer.secret_key, "ci-bot", "r", 1000);
    lying_digest.digest[5] = lying_digest.digest[5] == '0' ? '1' : '0';
    CHECK_THROWS_MATCHES(reg.put(lying_digest, 2000), Error,
                         ErrorCodeIs(ErrorCode::UnverifiableArtifact));

    // Nothing was persisted by either attempt.
    CHECK_THROWS_MATCHES(reg.get(artifact_digest(sample_artifact())), Error,
                         ErrorCodeIs(ErrorCode::NotFound));
}

TEST_CASE_METHOD(SignerFixture, "registry lookups of absent or malformed digests fail closed") {
    TempDir tmp;
    Registry reg(tmp.path("registry"), signer.public_key);
    CHECK_THROWS_MATCHES(reg.get(std::string(64, 'a')), Error, ErrorCodeIs(ErrorCode::NotFound));
    CHECK_THROWS_MATCHES(reg.get("deadbeef"), Error, ErrorCodeIs(ErrorCode::NotFound));
    CHECK_THROWS_MATCHES(reg.get("../../../etc/passwd"), Error, ErrorCodeIs(ErrorCode::NotFound));
    CHECK_THROWS_MATCHES(reg.get(std::string(64, 'Z')), Error, ErrorCodeIs(ErrorCode::NotFound));
}

TEST_CASE_METHOD(SignerFixture, "puts append provenance once and emit a tagged audit event") {
    TempDir tmp;
    Registry reg(tmp.path("registry"), signer.public_key);
    AuditLog log;
    auto sa = sign_artifact(sample_artifact(), signer.secret_key, "ci-bot", "run-991", 1000);

    reg.put(sa, 2000, &log);
    reg.put(sa, 3000, &log);  // idempotent: no second provenance line, no second event

    auto lines = read_text_file(reg.provenance_log_path().string());
    CHECK(std::count(lines.begin(), lines.end(), '\n') == 1);
    auto entry = nlohmann::json::parse(lines.substr(0, lines.find('\n')));
    CHECK(entry.at("digest") == sa.digest);
    CHECK(entry.at("signer_id") == "ci-bot");
    CHECK(entry.at("ci_run_id") == "run-991");

    REQUIRE(log.events().size() == 1);
    const auto& ev = log.events()[0];
    CHECK(ev.event_kind == EventKind::REGISTRY_PUT);
    CHECK(ev.ts_ms == 2000);
    CHECK(ev.detail.at("digest") == sa.digest);
    CHECK(ev.framework_tags == compliance_map(EventKind::REGISTRY_PUT, ""));
    CHECK(std::find(ev.framework_tags.begin(), ev.framework_tags.end(), "CIP-010-5-R1.1") !=
          ev.framework_tags.end());
}

TEST_CASE_METHOD(SignerFixture, "registry behaves like an append-only map under random workloads") {
    TempDir tmp;
    Registry reg(tmp.path("registry"), signer.public_key);
    std::map<std::string, Bytes> oracle;  // digest -> canonical stored bytes
    std::vector<SignedArtifact> pool;

    std::mt19937_64 rng(4242);
    for (int step = 0; step < 60; ++step) {
        int op = static_cast<int>(rng() % 3);
        if (op == 0 || pool.empty()) {  // put a fresh artifact
            ModelArtifact a;
            a.content = to_bytes("blob-" + std::to_string(rng() % 10));  // collisions on purpose
            a.manifest = {{"model_name", "m"}, {"version", std::to_string(rng() % 4)}};
            a.created_at = static_cast<std::int64_t>(rng() % 3);
            auto sa = sign_artifact(a, signer.secret_key, "ci",
                                    "run-" + std::to_string(rng() % 5),
                                    static_cast<std::int64_t>(rng() % 1000));
            pool.push_back(sa);
            auto it = oracle.find(sa.digest);
            if (it == oracle.end()) {
                auto receipt = reg.put(sa, step);
                CHECK_FALSE(receipt.already_present);
                oracle[sa.digest] = sa.to_bytes();
            } else if (it->second == sa.to_bytes()) {
                CHECK(reg.put(sa, step).already_present);
            } else {
                CHECK_THROWS_MATCHES(reg.put(sa, step), Error,
                                     ErrorCodeIs(ErrorCode::ImmutableViolation));
            }
        } else if (op == 1) {  // re-put an already seen artifact
            const auto& sa = pool[rng() % pool.size()];
            auto it = oracle.find(sa.digest);
            REQUIRE(it != oracle.end());
            if (it->second == sa.to_bytes()) {
                CHECK(reg.put(sa, step).already_present);
            } else {
                CHECK_THROWS_MATCHES(reg.put(sa, step), Error,
                                     ErrorCodeIs(ErrorCode::ImmutableViolation));
            }
        } else {  // read back
            const auto& sa = pool[rng() % pool.size()];
            CHECK(reg.read_object(sa.digest) == oracle.at(sa.digest));
        }
    }
    // Final sweep: every oracle entry is readable and verbatim.
    for (const auto& [digest, bytes] : oracle) CHECK(reg.read_object(digest) == bytes);
}

// --- adversarial robustness ------------------------------------------------------

TEST_CASE("worst-case perturbation matches the hand-worked example") {
    LinearModel m{{1.0, -2.0}, 0.0};
    auto adv = fgsm_perturb({0.5, 0.7}, m, +1, 0.1);
    REQUIRE(adv.size() == 2);
    CHECK_THAT(adv[0], Catch::Matchers::WithinAbs(0.4, 1e-15));
    CHECK_THAT(adv[1], Catch::Matchers::WithinAbs(0.8, 1e-15));

    // Opposite label steps the other way.
    auto adv_neg = fgsm_perturb({0.5, 0.7}, m, -1, 0.1);
    CHECK_THAT(adv_neg[0], Catch::Matchers::WithinAbs(0.6, 1e-15));
    CHECK_THAT(adv_neg[1], Catch::Matchers::WithinAbs(0.6, 1e-15));

    // Zero weight leaves the component untouched.
    LinearModel mz{{0.0, 3.0}, 0.5};
    auto adv_z = fgsm_perturb({1.0, 1.0}, mz, +1, 0.2);
    CHECK(adv_z[0] == 1.0);
    CHECK_THAT(adv_z[1], Catch::Matchers::WithinAbs(0.8, 1e-15));

    CHECK_THROWS_MATCHES(fgsm_perturb({1.0}, m, +1, 0.1), Error,
                         ErrorCodeIs(ErrorCode::DimensionMismatch));
    CHECK_THROWS_MATCHES(fgsm_perturb({1.0, 2.0}, m, +1, -0.1), Error,
                         ErrorCodeIs(ErrorCode::ConfigError));
}

TEST_CASE("no bounded perturbation hurts the margin more than the worst-case step") {
    LinearModel m{{0.7, -1.3, 0.0, 2.1}, -0.4};
    std::mt19937_64 rng(17);
    auto uniform = [&] { return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0); };
    auto score = [&](const std::vector<double>& x) {
        double s = m.bias;
        for (std::size_t i = 0; i < x.size(); ++i) s += m.weights[i] * x[i];
        return s;
    };
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(4);
        for (auto& v : x) v = uniform() * 4.0 - 2.0;
        int label = (trial % 2 == 0) ? +1 : -1;
        double eps = uniform();
        double fgsm_margin = label * score(fgsm_perturb(x, m, label, eps));
        for (int probe = 0; probe < 50; ++probe) {
            auto y = x;
            for (auto& v : y) v += (uniform() * 2.0 - 1.0) * eps;
            CHECK(label * score(y) >= fgsm_margin - 1e-9);
        }
    }
}

TEST_CASE("robust accuracy matches an independent margin computation on the toy dataset") {
    auto j = nlohmann::json::parse(read_text_file(fixtures_dir() + "/toy_robustness.json"));
    auto model = toy_model_from_json(j);
    auto samples = toy_samples_from_json(j);
    REQUIRE(samples.size() == 20);

    double l1 = 0.0;
    for (double w : model.weights) l1 += std::abs(w);
    REQUIRE(l1 == 3.0);

    for (int k = 0; k <= 10; ++k) {
        double eps = static_cast<double>(k) / 10.0;
        auto report = evaluate_robustness(model, samples, eps);
        CHECK(report.epsilon == eps);
        CHECK(report.clean_accuracy == 1.0);

        // Independent oracle: a sample survives iff its functional margin
        // exceeds eps * ||w||_1 (ties resolve via the sign(0) = +1 rule).
        int surviving = 0;
        for (const auto& s : samples) {
            double score = model.bias;
            for (std::size_t i = 0; i < s.x.size(); ++i) score += model.weights[i] * s.x[i];
            double margin = s.label * score;
            bool survives = s.label > 0 ? margin >= eps * l1 : margin > eps * l1;
            if (survives) ++surviving;
        }
        CHECK_THAT(report.robust_accuracy,
                   Catch::Matchers::WithinAbs(surviving / 20.0, 1e-12));
    }
}

TEST_CASE("robustness evaluation rejects degenerate inputs") {
    LinearModel m{{1.0, -2.0}, 0.0};
    CHECK_THROWS_MATCHES(evaluate_robustness(m, {}, 0.1), Error,
                         ErrorCodeIs(ErrorCode::EmptyDataset));
    CHECK_THROWS_MATCHES(m.predict({1.0, 2.0, 3.0}), Error,
                         ErrorCodeIs(ErrorCode::DimensionMismatch));
}

// --- CI gate -----------------------------------------------------------------

TEST_CASE("gate fails candidates that trade robustness for accuracy") {
    RobustnessReport baseline{0.92, 0.80, 0.3};

    auto tradeoff = robustness_gate({0.94, 0.75, 0.3}, baseline);
    CHECK_FALSE(tradeoff.pass);
    CHECK(tradeoff.reason == "accuracy-robustness tradeoff");

    // Better on both axes: pass.
    CHECK(robustness_gate({0.94, 0.85, 0.3}, baseline).pass);
    // Worse clean accuracy never triggers the tradeoff rule.
    CHECK(robustness_gate({0.90, 0.10, 0.3}, baseline).pass);
    // Equal clean accuracy is not an improvement, so no tradeoff.
    CHECK(robustness_gate({0.92, 0.75, 0.3}, baseline).pass);
    // Equal robustness with better accuracy is fine.
    CHECK(robustness_gate({0.94, 0.80, 0.3}, baseline).pass);
}

TEST_CASE("gate enforces the optional robust floor after the tradeoff rule") {
    RobustnessReport baseline{0.92, 0.80, 0.3};

    auto floored = robustness_gate({0.90, 0.55, 0.3}, baseline, 0.6);
    CHECK_FALSE(floored.pass);
    CHECK(floored.reason == "robust floor");

    // Tradeoff takes precedence when both conditions hold.
    auto both = robustness_gate({0.94, 0.55, 0.3}, baseline, 0.6);
    CHECK_FALSE(both.pass);
    CHECK(both.reason == "accuracy-robustness tradeoff");

    CHECK(robustness_gate({0.90, 0.60, 0.3}, baseline, 0.6).pass);  // floor is >=, not >
    CHECK(robustness_gate({0.90, 0.55, 0.3}, baseline).pass);       // default floor disabled

    CHECK_THROWS_MATCHES(robustness_gate({0.9, 0.8, 0.2}, baseline), Error,
                         ErrorCodeIs(ErrorCode::ConfigError));
}
