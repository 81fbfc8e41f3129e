#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "isnet/audio.hpp"
#include "isnet/checkpoint.hpp"
#include "isnet/data.hpp"

using namespace isnet;

namespace {
std::string tiny_config(const std::string& out_dir, const std::string& variant,
                        std::uint64_t seed) {
  return "variant=" + variant +
         "\n"
         "win_len=64\nhop=32\nn=4\n"
         "subinter1_h=8\nsubinter2_h=8\nlstm_hidden=16\n"
         "lr=1e-3\nsteps=4\nbatch=2\nT=48\n"
         "snr_min=-5\nsnr_max=20\nckpt_every=0\n"
         "seed=" +
         std::to_string(seed) + "\nout_dir=" + out_dir + "\n";
}
}  // namespace

TEST_CASE("missing config file exits 2 and names the path") {
  auto res = testutil::run_tool("train --config /nonexistent/nowhere.cfg");
  REQUIRE(res.exit_code == 2);
  REQUIRE(res.output.find("/nonexistent/nowhere.cfg") != std::string::npos);
}

TEST_CASE("unknown config keys exit 2 and are named") {
  testutil::ScratchDir dir("cli_badkey");
  testutil::write_file(dir.file("bad.cfg"), "variant=inter_subnet\nwat=7\n");
  auto res = testutil::run_tool("train --config " + dir.file("bad.cfg"));
  REQUIRE(res.exit_code == 2);
  REQUIRE(res.output.find("wat") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
  auto res = testutil::run_tool("train");
  REQUIRE(res.exit_code == 2);
  auto res2 = testutil::run_tool("frobnicate");
  REQUIRE(res2.exit_code == 2);
}

TEST_CASE("train produces a checkpoint and a loss log; runs are byte-identical") {
  testutil::ScratchDir dir("cli_train");
  testutil::write_file(dir.file("a.cfg"), tiny_config(dir.file("runA"), "inter_subnet", 5));
  testutil::write_file(dir.file("b.cfg"), tiny_config(dir.file("runB"), "inter_subnet", 5));

  auto a = testutil::run_tool("train --config " + dir.file("a.cfg") + " --deterministic");
  REQUIRE(a.exit_code == 0);
  auto b = testutil::run_tool("train --config " + dir.file("b.cfg") + " --deterministic");
  REQUIRE(b.exit_code == 0);

  const std::string log_a = testutil::read_file(dir.file("runA") + "/loss_log.csv");
  const std::string log_b = testutil::read_file(dir.file("runB") + "/loss_log.csv");
  REQUIRE(!log_a.empty());
  REQUIRE(log_a == log_b);
  REQUIRE(log_a.substr(0, 10) == "step,loss\n");

  REQUIRE(testutil::read_file(dir.file("runA") + "/ckpt_final.isn") ==
          testutil::read_file(dir.file("runB") + "/ckpt_final.isn"));
}

TEST_CASE("a baseline checkpoint carries no interaction parameters") {
  testutil::ScratchDir dir("cli_baseline");
  testutil::write_file(dir.file("c.cfg"), tiny_config(dir.file("run"), "subband_baseline", 6));
  auto res = testutil::run_tool("train --config " + dir.file("c.cfg"));
  REQUIRE(res.exit_code == 0);

  LoadedModel<float> loaded = load_checkpoint<float>(dir.file("run") + "/ckpt_final.isn");
  for (std::size_t i = 0; i < loaded.model->store().count(); ++i)
    REQUIRE(loaded.model->store().at(i).name.find("subinter") == std::string::npos);

  auto inspect = testutil::run_tool("inspect --ckpt " + dir.file("run") + "/ckpt_final.isn");
  REQUIRE(inspect.exit_code == 0);
  REQUIRE(inspect.output.find("subband_baseline") != std::string::npos);
  REQUIRE(inspect.output.find("SubInter") == std::string::npos);
}

TEST_CASE("enhance preserves the sample count and handles silence") {
  testutil::ScratchDir dir("cli_enh");
  testutil::write_file(dir.file("c.cfg"), tiny_config(dir.file("run"), "inter_subnet", 7));
  REQUIRE(testutil::run_tool("train --config " + dir.file("c.cfg")).exit_code == 0);
  const std::string ckpt = dir.file("run") + "/ckpt_final.isn";

  MixItem item = make_mix_item({.snr_min = 0, .snr_max = 0, .frames = 60, .seed = 9,
                                .win_len = 64, .hop = 32},
                               1234);
  write_wav(dir.file("noisy.wav"), item.noisy);
  auto res = testutil::run_tool("enhance --ckpt " + ckpt + " --in " + dir.file("noisy.wav") +
                                " --out " + dir.file("enh.wav"));
  REQUIRE(res.exit_code == 0);
  AudioSignal out = read_wav(dir.file("enh.wav"));
  REQUIRE(out.samples.size() == item.noisy.samples.size());

  AudioSignal silence;
  silence.samples.assign(3000, 0.0);
  write_wav(dir.file("zero.wav"), silence);
  REQUIRE(testutil::run_tool("enhance --ckpt " + ckpt + " --in " + dir.file("zero.wav") +
                             " --out " + dir.file("zero_out.wav"))
              .exit_code == 0);
  AudioSignal zout = read_wav(dir.file("zero_out.wav"));
  double energy = 0;
  for (double x : zout.samples) energy += x * x;
  REQUIRE(energy <= 1e-9);

  // stereo input is a runtime failure with a clear message
  std::string stereo;
  {
    std::string pcm(8, '\0');
    stereo = "RIFF";
    detail::wr_u32(stereo, 36 + 8);
    stereo += "WAVEfmt ";
    detail::wr_u32(stereo, 16);
    detail::wr_u16(stereo, 1);
    detail::wr_u16(stereo, 2);
    detail::wr_u32(stereo, 16000);
    detail::wr_u32(stereo, 64000);
    detail::wr_u16(stereo, 4);
    detail::wr_u16(stereo, 16);
    stereo += "data";
    detail::wr_u32(stereo, 8);
    stereo += pcm;
  }
  testutil::write_file(dir.file("stereo.wav"), stereo);
  auto bad = testutil::run_tool("enhance --ckpt " + ckpt + " --in " + dir.file("stereo.wav") +
                                " --out " + dir.file("x.wav"));
  REQUIRE(bad.exit_code == 1);
  REQUIRE(bad.output.find("mono") != std::string::npos);
}

TEST_CASE("eval prints the per-utterance table and a summary") {
  testutil::ScratchDir dir("cli_eval");
  testutil::write_file(dir.file("c.cfg"), tiny_config(dir.file("run"), "inter_subnet", 8));
  REQUIRE(testutil::run_tool("train --config " + dir.file("c.cfg")).exit_code == 0);

  auto res = testutil::run_tool("eval --ckpt " + dir.file("run") + "/ckpt_final.isn" +
                                " --seed 3 --items 4");
  REQUIRE(res.exit_code == 0);
  REQUIRE(res.output.find("id,snr_db,sisdr_noisy,sisdr_enh,delta") != std::string::npos);
  REQUIRE(res.output.find("mean SI-SDR") != std::string::npos);
  // header + 4 rows + summary
  REQUIRE(std::count(res.output.begin(), res.output.end(), '\n') >= 6);
}

TEST_CASE("verify passes on a healthy build and fails on a corrupted gradient") {
  auto ok = testutil::run_tool("verify --seeds 2");
  REQUIRE(ok.exit_code == 0);
  REQUIRE(ok.output.find("all checks passed") != std::string::npos);
  REQUIRE(ok.output.find("2,291,502") != std::string::npos);  // parameter audit
  REQUIRE(ok.output.find("1,822,466") != std::string::npos);
  REQUIRE(ok.output.find("3,004,418") != std::string::npos);

  auto bad = testutil::run_tool("verify --seeds 2 --corrupt subinter");
  REQUIRE(bad.exit_code == 1);
  REQUIRE(bad.output.find("[FAIL] gradcheck/subinter") != std::string::npos);
}

TEST_CASE("inspect lists the interaction layers of the full-scale model") {
  testutil::ScratchDir dir("cli_inspect");
  {
    Model<float> m(build_variant(Variant::inter_subnet), 1);
    save_checkpoint(dir.file("inter.isn"), m.config(), m.store(), false);
    Model<float> l(build_variant(Variant::subband_large), 1);
    save_checkpoint(dir.file("large.isn"), l.config(), l.store(), false);
  }

  auto res = testutil::run_tool("inspect --ckpt " + dir.file("inter.isn"));
  REQUIRE(res.exit_code == 0);
  REQUIRE(res.output.find("SubInter 31 -> 102") != std::string::npos);
  REQUIRE(res.output.find("SubInter 384 -> 307") != std::string::npos);
  REQUIRE(res.output.find("2,291,502") != std::string::npos);
  REQUIRE(res.output.find("2.29 M") != std::string::npos);

  auto large = testutil::run_tool("inspect --ckpt " + dir.file("large.isn"));
  REQUIRE(large.exit_code == 0);
  REQUIRE(std::count(large.output.begin(), large.output.end(), 'L') >= 3);
  REQUIRE(large.output.find("LSTM 384 -> 384") != std::string::npos);

  // truncated checkpoint: clean error, nonzero exit, no crash
  const std::string good = testutil::read_file(dir.file("inter.isn"));
  testutil::write_file(dir.file("trunc.isn"), good.substr(0, 200));
  auto bad = testutil::run_tool("inspect --ckpt " + dir.file("trunc.isn"));
  REQUIRE(bad.exit_code == 1);
  REQUIRE(bad.output.find("unexpected end") != std::string::npos);
}
