#include "voxid/eval.hpp"

#include <fstream>
#include <sstream>

#include <doctest.h>

#include "test_util.hpp"
#include "voxid/synth.hpp"

using namespace voxid;
using test_util::TempDir;

namespace {

// Small corpus shared by the evaluation tests; generated once.
const std::filesystem::path& shared_corpus() {
    static TempDir dir("corpus");
    static std::filesystem::path manifest =
        synth_corpus(dir.path(), 2, 5, 7);
    return manifest;
}

}  // namespace

TEST_CASE("synth_corpus writes the expected files and split") {
    TempDir dir("synthcount");
    const auto manifest_path = synth_corpus(dir.path(), 2, 5, 123);
    CHECK(manifest_path.filename() == "manifest.tsv");

    const Manifest manifest = load_manifest(manifest_path);
    CHECK(manifest.entries.size() == 10);
    std::size_t train = 0, test = 0, files = 0;
    for (const auto& e : manifest.entries) {
        (e.is_train ? train : test) += 1;
        CHECK(std::filesystem::exists(e.wav_path));
    }
    CHECK(train == 8);  // floor(0.8 * 5) = 4 per speaker
    CHECK(test == 2);
    for (const auto& entry : std::filesystem::directory_iterator(dir.path()))
        if (entry.path().extension() == ".wav") ++files;
    CHECK(files == 10);
}

TEST_CASE("synth_corpus is byte-identical for a fixed seed") {
    TempDir a("syntha");
    TempDir b("synthb");
    synth_corpus(a.path(), 2, 4, 99);
    synth_corpus(b.path(), 2, 4, 99);
    for (const auto& entry : std::filesystem::directory_iterator(a.path())) {
        const auto other = b.path() / entry.path().filename();
        REQUIRE(std::filesystem::exists(other));
        CHECK(test_util::read_bytes(entry.path()) == test_util::read_bytes(other));
    }
}

TEST_CASE("single-speaker corpus evaluates to a trivial 100%") {
    TempDir dir("synth1");
    const auto manifest_path = synth_corpus(dir.path(), 1, 5, 11);
    const Manifest manifest = load_manifest(manifest_path);
    EngineConfig cfg;
    cfg.vq_k = 8;
    const EvalReport report =
        evaluate_grid(manifest, {{Backend::Vq, 8, 50, 0.0}}, cfg, 1);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].identification_rate == 100.0);
    CHECK(report.rows[0].trials == 1);
}

TEST_CASE("manifest parsing errors") {
    TempDir dir("manifest");
    const auto path = dir.path() / "manifest.tsv";
    {
        std::ofstream out(path);
        out << "spk01\tvalidation\tx.wav\n";
    }
    CHECK_THROWS_AS(load_manifest(path), std::invalid_argument);
    {
        std::ofstream out(path, std::ios::trunc);
        out << "spk01 train x.wav\n";  // no tabs
    }
    CHECK_THROWS_AS(load_manifest(path), std::invalid_argument);
    CHECK_THROWS_AS(load_manifest(dir.path() / "missing.tsv"), std::invalid_argument);
}

TEST_CASE("evaluate_grid rejects speakers without both splits") {
    TempDir dir("split");
    const auto corpus = synth_corpus(dir.path(), 1, 5, 3).parent_path();
    const auto path = dir.path() / "lopsided.tsv";
    {
        std::ofstream out(path);
        out << "spk01\ttrain\tspk01_utt01.wav\n";  // no test entries
    }
    EngineConfig cfg;
    CHECK_THROWS_WITH_AS(
        evaluate_grid(load_manifest(path), {{Backend::Vq, 4, 10, 0.0}}, cfg, 1),
        "speaker has no test utterances: spk01", std::invalid_argument);
    {
        std::ofstream out(path, std::ios::trunc);
        out << "spk01\ttest\tspk01_utt01.wav\n";  // no training entries
    }
    CHECK_THROWS_WITH_AS(
        evaluate_grid(load_manifest(path), {{Backend::Vq, 4, 10, 0.0}}, cfg, 1),
        "speaker has no training utterances: spk01", std::invalid_argument);
}

TEST_CASE("evaluate_grid rejects a manifest with missing audio") {
    TempDir dir("missingwav");
    const auto path = dir.path() / "manifest.tsv";
    {
        std::ofstream out(path);
        out << "spk01\ttrain\tnot_there.wav\nspk01\ttest\talso_missing.wav\n";
    }
    const Manifest manifest = load_manifest(path);
    EngineConfig cfg;
    CHECK_THROWS(evaluate_grid(manifest, {{Backend::Vq, 4, 10, 0.0}}, cfg, 1));
}

TEST_CASE("evaluate_grid emits rows in grid order") {
    const Manifest manifest = load_manifest(shared_corpus());
    EngineConfig cfg;
    const std::vector<GridPoint> grid = {
        {Backend::Vq, 8, 50, 0.0},
        {Backend::Vq, 16, 50, 0.0},
        {Backend::Vq, 32, 50, 0.0},
        {Backend::Gmm, 4, 6, 0.0},
        {Backend::Gmm, 4, 8, 0.0},
        {Backend::Gmm, 4, 10, 0.0},
    };
    const EvalReport report = evaluate_grid(manifest, grid, cfg, 1);
    REQUIRE(report.rows.size() == 6);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(report.rows[i].backend == grid[i].backend);
        CHECK(report.rows[i].k_or_m == grid[i].k_or_m);
        CHECK(report.rows[i].iterations == grid[i].iterations);
        CHECK(report.rows[i].trials == 2);
        CHECK(report.rows[i].outcomes.size() == 2);
    }
}

TEST_CASE("train caps shorten the data a grid point sees") {
    const Manifest manifest = load_manifest(shared_corpus());
    EngineConfig cfg;
    const EvalReport report = evaluate_grid(
        manifest, {{Backend::Gmm, 2, 6, 6.0}, {Backend::Gmm, 2, 6, 0.0}}, cfg, 1);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].train_seconds <= 6.0 + 1e-9);
    CHECK(report.rows[1].train_seconds > report.rows[0].train_seconds);
}

TEST_CASE("csv report is self-consistent and parallel-invariant") {
    const Manifest manifest = load_manifest(shared_corpus());
    EngineConfig cfg;
    const std::vector<GridPoint> grid = {
        {Backend::Vq, 8, 50, 0.0},
        {Backend::Gmm, 2, 8, 0.0},
    };
    const EvalReport serial = evaluate_grid(manifest, grid, cfg, 1);
    const EvalReport parallel = evaluate_grid(manifest, grid, cfg, 3);
    const std::string csv = report_to_csv(serial);
    CHECK(csv == report_to_csv(parallel));

    // recount rates from the CSV's own trials/correct columns
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line ==
          "backend,k_or_m,iterations,train_seconds,test_seconds,trials,correct,"
          "identification_rate");
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        std::vector<std::string> fields;
        std::istringstream fs(line);
        std::string field;
        while (std::getline(fs, field, ',')) fields.push_back(field);
        REQUIRE(fields.size() == 8);
        const double trials = std::stod(fields[5]);
        const double correct = std::stod(fields[6]);
        const double rate = std::stod(fields[7]);
        CHECK(rate == doctest::Approx(100.0 * correct / trials).epsilon(1e-9));
        ++rows;
    }
    CHECK(rows == 2);
}
