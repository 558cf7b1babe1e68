#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#include "test_util.hpp"
#include "voxid/audio.hpp"
#include "voxid/synth.hpp"

using test_util::TempDir;

namespace {

const char* cli_path() { return std::getenv("VOXID_CLI"); }

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args, const std::filesystem::path& scratch) {
    const auto out_file = scratch / "cli_output.txt";
    const std::string cmd = std::string("\"") + cli_path() + "\" " + args + " > \"" +
                            out_file.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    std::ostringstream buf;
    buf << in.rdbuf();
    result.output = buf.str();
    return result;
}

}  // namespace

TEST_CASE("cli end to end: enroll, inspect, identify, evaluate") {
    if (!cli_path()) {
        MESSAGE("VOXID_CLI not set; skipping CLI tests");
        return;
    }
    TempDir dir("cli");
    const auto corpus = dir.path() / "corpus";
    voxid::synth_corpus(corpus, 2, 5, 21);
    const std::string registry = (dir.path() / "voices.reg").string();

    SUBCASE("usage errors exit 1") {
        CHECK(run_cli("enroll", dir.path()).exit_code == 1);
        CHECK(run_cli("no-such-command", dir.path()).exit_code == 1);
        CHECK(run_cli("identify --registry missing.reg", dir.path()).exit_code == 1);
    }

    SUBCASE("help exits 0") {
        const auto result = run_cli("--help", dir.path());
        CHECK(result.exit_code == 0);
        CHECK(result.output.find("enroll") != std::string::npos);
    }

    SUBCASE("enroll/identify round trip") {
        const std::string s1 = (corpus / "spk01_utt01.wav").string();
        const std::string s1b = (corpus / "spk01_utt02.wav").string();
        const std::string s2 = (corpus / "spk02_utt01.wav").string();
        auto enroll1 = run_cli("enroll --registry " + registry + " spk01 \"" + s1 +
                                   "\" \"" + s1b + "\"",
                               dir.path());
        CHECK(enroll1.exit_code == 0);
        CHECK(enroll1.output.find("enrolled spk01") != std::string::npos);
        CHECK(run_cli("enroll --registry " + registry + " spk02 \"" + s2 + "\"",
                      dir.path())
                  .exit_code == 0);

        const auto inspect = run_cli("inspect --registry " + registry, dir.path());
        CHECK(inspect.exit_code == 0);
        CHECK(inspect.output.find("speakers: 2") != std::string::npos);
        CHECK(inspect.output.find("spk01") != std::string::npos);

        const std::string probe = (corpus / "spk01_utt05.wav").string();
        for (const std::string backend : {"vq", "gmm"}) {
            const auto identify =
                run_cli("identify --registry " + registry + " --backend " + backend +
                            " \"" + probe + "\"",
                        dir.path());
            CHECK(identify.exit_code == 0);
            CHECK(identify.output.find("decision: spk01") != std::string::npos);
        }

        // unreachable open-set threshold: distortion can never be <= 0
        const auto rejected =
            run_cli("identify --registry " + registry +
                        " --backend vq --threshold 0 \"" + probe + "\"",
                    dir.path());
        CHECK(rejected.exit_code == 3);
        CHECK(rejected.output.find("decision: unknown") != std::string::npos);
    }

    SUBCASE("enroll with too little audio exits 2") {
        voxid::AudioBuffer blip;
        blip.sample_rate = 16000;
        blip.samples.assign(160, 0.1);  // 0.01 s
        const auto blip_path = dir.path() / "blip.wav";
        voxid::write_wav_16bit(blip_path, blip);
        const auto result = run_cli(
            "enroll --registry " + registry + " shorty \"" + blip_path.string() + "\"",
            dir.path());
        CHECK(result.exit_code == 2);

        voxid::AudioBuffer brief;
        brief.sample_rate = 16000;
        brief.samples.assign(2400, 0.1);  // 0.15 s -> a few frames, below K
        const auto brief_path = dir.path() / "brief.wav";
        voxid::write_wav_16bit(brief_path, brief);
        const auto partial = run_cli(
            "enroll --registry " + registry + " shorty \"" + brief_path.string() + "\"",
            dir.path());
        CHECK(partial.exit_code == 2);
        CHECK(partial.output.find("insufficient data") != std::string::npos);
    }

    SUBCASE("evaluate writes identical csv across runs and thread counts") {
        const std::string manifest = (corpus / "manifest.tsv").string();
        const std::string base = "evaluate \"" + manifest +
                                 "\" --backend vq --backend gmm --k 8 --m 2 "
                                 "--train-cap 0 --csv ";
        const auto csv1 = dir.path() / "r1.csv";
        const auto csv2 = dir.path() / "r2.csv";
        const auto csv3 = dir.path() / "r3.csv";
        CHECK(run_cli(base + "\"" + csv1.string() + "\" --threads 1", dir.path())
                  .exit_code == 0);
        CHECK(run_cli(base + "\"" + csv2.string() + "\" --threads 1", dir.path())
                  .exit_code == 0);
        CHECK(run_cli(base + "\"" + csv3.string() + "\" --threads 4", dir.path())
                  .exit_code == 0);
        const auto b1 = test_util::read_bytes(csv1);
        CHECK(b1 == test_util::read_bytes(csv2));
        CHECK(b1 == test_util::read_bytes(csv3));
        CHECK(!b1.empty());
    }

    SUBCASE("config file values apply and flags override them") {
        const auto cfg_path = dir.path() / "engine.cfg";
        {
            std::ofstream out(cfg_path);
            out << "vq_k = 4\ngmm_m = 2\n";
        }
        const std::string s1 = (corpus / "spk01_utt01.wav").string();
        REQUIRE(run_cli("enroll --registry " + registry + " --config \"" +
                            cfg_path.string() + "\" spk01 \"" + s1 + "\"",
                        dir.path())
                    .exit_code == 0);
        const auto inspect = run_cli("inspect --registry " + registry, dir.path());
        CHECK(inspect.output.find("codebook K=4") != std::string::npos);
        CHECK(inspect.output.find("gmm M=2") != std::string::npos);

        REQUIRE(run_cli("enroll --registry " + registry + " --config \"" +
                            cfg_path.string() + "\" --k 8 spk01 \"" + s1 + "\"",
                        dir.path())
                    .exit_code == 0);
        const auto again = run_cli("inspect --registry " + registry, dir.path());
        CHECK(again.output.find("codebook K=8") != std::string::npos);

        const auto bad = run_cli("enroll --registry " + registry +
                                     " --config no_such.cfg spk01 \"" + s1 + "\"",
                                 dir.path());
        CHECK(bad.exit_code == 2);
    }

    SUBCASE("identify against a corrupt registry exits 2") {
        const std::string s1 = (corpus / "spk01_utt01.wav").string();
        REQUIRE(run_cli("enroll --registry " + registry + " spk01 \"" + s1 + "\"",
                        dir.path())
                    .exit_code == 0);
        auto bytes = test_util::read_bytes(registry);
        bytes[bytes.size() / 2] ^= 0x01;
        test_util::write_bytes(registry, bytes);
        const auto result = run_cli("identify --registry " + registry +
                                        " --backend vq \"" + s1 + "\"",
                                    dir.path());
        CHECK(result.exit_code == 2);
        CHECK(result.output.find("checksum") != std::string::npos);
    }
}
