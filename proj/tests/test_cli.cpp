#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "helpers.hpp"
#include "vpt/checkpoint.hpp"
#include "vpt/midi.hpp"
#include "vpt/pipeline.hpp"
#include "vpt/video_io.hpp"

using namespace vpt;

namespace {

struct CliRun {
    int status;
    std::string output;  // stdout and stderr combined
    bool ok() const { return status == 0; }
};

CliRun run_cli(const test::TempDir& tmp, const std::string& args) {
    std::filesystem::path log = tmp.path() / "cli_output.txt";
    std::string cmd = test::cli_path() + " " + args + " > " + log.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream buf;
    buf << in.rdbuf();
    return {status, buf.str()};
}

std::string quoted(const std::filesystem::path& p) { return p.string(); }

}  // namespace

TEST_CASE("eval scores a file against itself as perfect", "[cli]") {
    test::TempDir tmp;
    std::filesystem::path mid = tmp.path() / "truth.mid";
    write_binary_file(mid, write_smf({{1.0, 60}, {2.0, 64}, {2.5, 72}}));
    std::filesystem::path report = tmp.path() / "report.csv";

    CliRun run = run_cli(tmp, "eval --ref " + quoted(mid) + " --est " + quoted(mid) +
                                  " --out " + quoted(report));
    INFO(run.output);
    REQUIRE(run.ok());

    std::ifstream in(report);
    std::stringstream buf;
    buf << in.rdbuf();
    REQUIRE(buf.str().find("micro,1,1,1,3,3,3") != std::string::npos);
}

TEST_CASE("eval rejects mismatched file lists", "[cli]") {
    test::TempDir tmp;
    std::filesystem::path mid = tmp.path() / "a.mid";
    write_binary_file(mid, write_smf({{1.0, 60}}));
    CliRun run = run_cli(tmp, "eval --ref " + quoted(mid) + " --ref " + quoted(mid) +
                                  " --est " + quoted(mid));
    REQUIRE_FALSE(run.ok());
    REQUIRE(run.output.find("same number") != std::string::npos);
}

TEST_CASE("transcribe refuses videos shorter than one window", "[cli]") {
    test::TempDir tmp;
    std::filesystem::path dir = tmp.path();
    std::filesystem::create_directories(dir / "frames");

    VideoManifest m;
    m.frame_dir = dir / "frames";
    m.frame_pattern = "frame_%06d.ppm";
    m.frame_count = 15;
    m.fps = 30.0;
    m.width = 64;
    m.height = 32;
    ImageU8 frame(32, 64, 3);
    for (auto& px : frame.v) px = 100;
    for (int f = 0; f < 15; ++f) write_ppm(frame_path(m, f), frame);
    write_manifest(m, dir / "video.manifest", "frames");
    test::write_text(dir / "detections.txt", "0 8 8 56 24 1.0\n");

    ModelConfig cfg;
    cfg.frames = 16;
    cfg.res = 16;
    cfg.tubelet = 2;
    cfg.patch = 8;
    cfg.dim = 16;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.channels = 1;
    Checkpoint ckpt{init_params<float>(cfg, 1),
                    {{"fit", "split"}, {"grayscale", "1"}, {"normalize", "0"}}};
    save_checkpoint(dir / "m.ckpt", ckpt);

    CliRun run = run_cli(tmp, "transcribe --manifest " + quoted(dir / "video.manifest") +
                                  " --detections " + quoted(dir / "detections.txt") +
                                  " --checkpoint " + quoted(dir / "m.ckpt") + " --out " +
                                  quoted(dir / "est.mid"));
    REQUIRE_FALSE(run.ok());
    REQUIRE(run.output.find("video too short") != std::string::npos);
}

TEST_CASE("contradictory color flags are refused", "[cli]") {
    test::TempDir tmp;
    CliRun run = run_cli(tmp, "train --data x --checkpoint y --grayscale --normalize-rgb");
    REQUIRE_FALSE(run.ok());
    REQUIRE(run.output.find("excludes") != std::string::npos);
}

TEST_CASE("unknown flags are refused", "[cli]") {
    test::TempDir tmp;
    REQUIRE_FALSE(run_cli(tmp, "synth --out x --bogus-flag 3").ok());
    REQUIRE_FALSE(run_cli(tmp, "").ok());  // a subcommand is required
}

TEST_CASE("the full pipeline runs at toy scale", "[cli]") {
    test::TempDir tmp;
    std::filesystem::path data = tmp.path() / "data";

    CliRun synth = run_cli(tmp, "synth --out " + quoted(data) +
                                    " --duration 2.0 --note 0.8,60 --note 1.4,72");
    INFO(synth.output);
    REQUIRE(synth.ok());
    REQUIRE(synth.output.find("60 frames, 2 onsets") != std::string::npos);

    std::filesystem::path ckpt = tmp.path() / "toy.ckpt";
    CliRun train = run_cli(tmp, "train --data " + quoted(data) + " --checkpoint " + quoted(ckpt) +
                                    " --steps 25 --batch 4 --lr 1e-3 --weight 2 --cull-keep 1.0" +
                                    " --fit split --grayscale --target 32 --patch 8" +
                                    " --dim 16 --layers 1 --heads 2 --seed 3");
    INFO(train.output);
    REQUIRE(train.ok());
    REQUIRE(train.output.find("trained 25 steps") != std::string::npos);

    std::filesystem::path est = tmp.path() / "est.mid";
    std::filesystem::path act = tmp.path() / "act.csv";
    CliRun tr = run_cli(tmp, "transcribe --manifest " + quoted(data / "video.manifest") +
                                 " --detections " + quoted(data / "detections.txt") +
                                 " --checkpoint " + quoted(ckpt) + " --out " + quoted(est) +
                                 " --dump-activations " + quoted(act));
    INFO(tr.output);
    REQUIRE(tr.ok());
    REQUIRE(std::filesystem::exists(est));
    REQUIRE_NOTHROW(parse_smf(read_binary_file(est)));

    std::ifstream dump(act);
    std::string header;
    std::getline(dump, header);
    REQUIRE(header == "frame,key,value");
    // 60 frames -> 45 window positions x 88 keys
    std::size_t rows = 0;
    for (std::string line; std::getline(dump, line);) ++rows;
    REQUIRE(rows == 45u * 88u);

    std::filesystem::path report = tmp.path() / "report.csv";
    CliRun ev = run_cli(tmp, "eval --ref " + quoted(data / "truth.mid") + " --est " + quoted(est) +
                                 " --out " + quoted(report));
    INFO(ev.output);
    REQUIRE(ev.ok());
    std::ifstream in(report);
    std::string head;
    std::getline(in, head);
    REQUIRE(head == "file,precision,recall,f1,matched,n_ref,n_est");
}

TEST_CASE("preview writes one image per fit mode", "[cli]") {
    test::TempDir tmp;
    ImageU8 img(48, 64, 3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) = static_cast<std::uint8_t>((x * 3 + y + c) & 0xFF);
    std::filesystem::path in = tmp.path() / "in.ppm";
    write_ppm(in, img);

    std::string prefix = (tmp.path() / "fit").string();
    CliRun run = run_cli(tmp, "preview --image " + quoted(in) + " --out-prefix " + prefix +
                                  " --target 32");
    INFO(run.output);
    REQUIRE(run.ok());
    for (const char* suffix : {"stretch", "aspect", "split", "split-stretch"}) {
        std::filesystem::path out = prefix + std::string("-") + suffix + ".ppm";
        REQUIRE(std::filesystem::exists(out));
        ImageU8 fitted = read_ppm(out);
        REQUIRE(fitted.h == 32);
        REQUIRE(fitted.w == 32);
    }
}

TEST_CASE("gradient check passes at a tiny configuration", "[cli]") {
    test::TempDir tmp;
    CliRun run = run_cli(tmp, "gradcheck --frames 4 --res 16 --tubelet 2 --patch 8 --dim 16"
                              " --layers 2 --heads 2 --channels 1 --batch 2 --seed 1");
    INFO(run.output);
    REQUIRE(run.ok());
    REQUIRE(run.output.find("gradient check passed") != std::string::npos);
}
