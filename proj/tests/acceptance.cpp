// Acceptance suite. Runs every gated criterion at its stated tolerance and
// prints one [PASS]/[FAIL] line per criterion; exits nonzero if any gated
// criterion fails.
//
// ISNET_ACCEPT_QUICK=1 shrinks the long training protocols for smoke runs
// (criterion 5/6 results are then not meaningful and are marked as such).
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "isnet/isnet.hpp"

using namespace isnet;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int g_failures = 0;

void report(int criterion, bool pass, const std::string& text, bool gated = true) {
  std::printf("[%s] criterion %d: %s%s\n", pass ? "PASS" : "FAIL", criterion, text.c_str(),
              gated ? "" : " (reported, not gated)");
  std::fflush(stdout);
  if (gated && !pass) ++g_failures;
}

// Desk-scale protocol shared by criteria 5 and 6: F=33 bins (16 ms window at
// 16 kHz), n=4 neighbors, interaction widths 16/16, LSTM width 64
// (about 60k parameters), 2000 Adam steps at lr 1e-3 on dynamic mixtures
// drawn from SNR [-5, 20] dB.
struct ToyProtocol {
  std::size_t steps = 2000;
  std::size_t eval_items = 50;
  double min_mean_delta_db = 3.0;
  double max_train_seconds = 900.0;

  TrainConfig config(Variant variant, std::uint64_t seed, const std::string& out_dir) const {
    TrainConfig cfg;
    cfg.model.variant = variant;
    cfg.model.win_len = 64;
    cfg.model.hop = 32;
    cfg.model.bins = 33;
    cfg.model.n = 4;
    cfg.model.subinter1_h = 16;
    cfg.model.subinter2_h = 16;
    cfg.model.lstm_hidden = 64;
    cfg.lr = 1e-3;
    cfg.steps = steps;
    cfg.batch = 4;
    cfg.seed = seed;
    cfg.snr_min = -5.0;
    cfg.snr_max = 20.0;
    cfg.frames = 192;
    cfg.ckpt_every = 500;
    cfg.out_dir = out_dir;
    return cfg;
  }
};

double smoothed_final_loss(const TrainResult& res, std::size_t window = 100) {
  const std::size_t n = std::min(window, res.loss_log.size());
  double s = 0;
  for (std::size_t i = res.loss_log.size() - n; i < res.loss_log.size(); ++i)
    s += res.loss_log[i].second;
  return s / static_cast<double>(n);
}

}  // namespace

int main() {
  const bool quick = std::getenv("ISNET_ACCEPT_QUICK") != nullptr;
  if (quick) std::printf("[QUICK MODE] training protocols shortened; 5 and 6 not meaningful\n");

  std::filesystem::path work =
      std::filesystem::temp_directory_path() / ("isnet_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(work);

  // ---- criterion 1: parameter-count audit ----
  {
    const auto t0 = Clock::now();
    struct Row {
      Variant v;
      std::uint64_t lo, hi;
    };
    const Row rows[] = {
        {Variant::inter_subnet, 2270000, 2310000},
        {Variant::subband_baseline, 1800000, 1840000},
        {Variant::subband_large, 2980000, 3020000},
    };
    bool ok = true;
    std::string detail;
    for (const Row& row : rows) {
      Model<float> m(build_variant(row.v), 0);
      const std::uint64_t n = m.store().param_count();
      ok = ok && n >= row.lo && n <= row.hi && n == config_param_count(build_variant(row.v));
      detail += std::string(to_string(row.v)) + "=" + with_commas(n) + " ";
    }
    const double dt = seconds_since(t0);
    ok = ok && dt < 1.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "(%.3f s)", dt);
    report(1, ok, "parameter audit " + detail + buf);
  }

  // ---- criteria 2, 3, 4 via the self-check suite ----
  {
    const auto t0 = Clock::now();
    SelfcheckOptions opt;
    opt.grad_seeds = 20;
    const auto results = run_selfcheck(opt);
    const double dt = seconds_since(t0);

    bool grad_ok = dt < 120.0;
    double grad_worst = 0;
    bool equi_ok = false, resid_ok = false;
    double equi_measured = 0;
    bool stft_ok = false, cirm_ok = false, comp_ok = false;
    double stft_measured = 0, cirm_measured = 0, comp_measured = 0;
    for (const auto& r : results) {
      if (r.name.rfind("gradcheck/", 0) == 0) {
        grad_ok = grad_ok && r.measured < 1e-4;
        grad_worst = std::max(grad_worst, r.measured);
      } else if (r.name == "subinter/permutation_equivariance") {
        equi_ok = r.measured < 1e-6;
        equi_measured = r.measured;
      } else if (r.name == "subinter/residual_identity") {
        resid_ok = r.pass;
      } else if (r.name == "stft/roundtrip") {
        stft_ok = r.measured < 1e-6;
        stft_measured = r.measured;
      } else if (r.name == "cirm/ideal_mask_roundtrip") {
        cirm_ok = r.measured < 1e-6;
        cirm_measured = r.measured;
      } else if (r.name == "cirm/compress_roundtrip") {
        comp_ok = r.measured < 1e-6;
        comp_measured = r.measured;
      }
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "gradient suite, 20 seeds: max rel err %.3g (< 1e-4), %.1f s (< 120 s)",
                  grad_worst, dt);
    report(2, grad_ok, buf);
    std::snprintf(buf, sizeof(buf),
                  "interaction equivariance max diff %.3g (< 1e-6, 50 cases); zero fusion map "
                  "identity %s",
                  equi_measured, resid_ok ? "bit-exact" : "NOT exact");
    report(3, equi_ok && resid_ok, buf);
    std::snprintf(buf, sizeof(buf),
                  "stft roundtrip %.3g, ideal-mask roundtrip %.3g, compress roundtrip %.3g "
                  "(all < 1e-6)",
                  stft_measured, cirm_measured, comp_measured);
    report(4, stft_ok && cirm_ok && comp_ok, buf);
  }

  // ---- criterion 5: desk-scale enhancement ----
  ToyProtocol proto;
  if (quick) {
    proto.steps = 60;
    proto.eval_items = 8;
  }
  double crit5_delta = 0;
  {
    const auto t0 = Clock::now();
    TrainConfig cfg = proto.config(Variant::inter_subnet, 31, (work / "crit5").string());
    TrainResult res = train(cfg);
    LoadedModel<float> trained = load_checkpoint<float>(res.final_checkpoint);

    MixSpec eval_spec = cfg.mix_spec();
    eval_spec.seed = 4242;  // held out: disjoint from every training stream
    EvalReport rep = evaluate(*trained.model, eval_spec, proto.eval_items);
    const double dt = seconds_since(t0);
    crit5_delta = rep.mean_delta;

    const bool ok = rep.mean_delta >= proto.min_mean_delta_db && dt < proto.max_train_seconds;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "toy model (%s params), %zu steps: mean SI-SDR delta %+.3f dB over %zu held-out "
                  "items (>= +3 dB), %.0f s (< %.0f s)",
                  with_commas(config_param_count(cfg.model)).c_str(), cfg.steps, rep.mean_delta,
                  rep.items.size(), dt, proto.max_train_seconds);
    report(5, ok, buf);
    // keep the criterion-5 run for reuse below
    std::filesystem::rename(work / "crit5", work / "ablate_inter_subnet_31");
  }

  // ---- criterion 6: ablation direction (soft) ----
  {
    const std::uint64_t seeds[] = {31, 32, 33};
    const Variant variants[] = {Variant::inter_subnet, Variant::minus_2nd_subinter,
                                Variant::minus_both_subinter};
    const std::size_t n_seeds = quick ? 1 : 3;

    double mean_loss[3] = {0, 0, 0};
    std::string trace;
    for (std::size_t vi = 0; vi < 3; ++vi) {
      for (std::size_t si = 0; si < n_seeds; ++si) {
        const std::string tag = std::string(to_string(variants[vi])) + "_" +
                                std::to_string(seeds[si]);
        TrainConfig cfg = proto.config(variants[vi], seeds[si], (work / ("ablate_" + tag)).string());
        double final_loss;
        const std::string reuse = (work / ("ablate_" + tag) / "loss_log.csv").string();
        if (std::filesystem::exists(reuse)) {
          // criterion 5 already trained this exact configuration
          std::ifstream f(reuse);
          std::string line;
          std::getline(f, line);  // header
          std::vector<double> losses;
          while (std::getline(f, line)) {
            auto comma = line.find(',');
            if (comma != std::string::npos) losses.push_back(std::stod(line.substr(comma + 1)));
          }
          const std::size_t w = std::min<std::size_t>(100, losses.size());
          double s = 0;
          for (std::size_t i = losses.size() - w; i < losses.size(); ++i) s += losses[i];
          final_loss = s / static_cast<double>(w);
        } else {
          TrainResult res = train(cfg);
          final_loss = smoothed_final_loss(res);
        }
        mean_loss[vi] += final_loss;
        char buf[128];
        std::snprintf(buf, sizeof(buf), "    %-22s seed %llu  final smoothed loss %.6f\n",
                      to_string(variants[vi]), static_cast<unsigned long long>(seeds[si]),
                      final_loss);
        trace += buf;
      }
      mean_loss[vi] /= static_cast<double>(n_seeds);
    }
    std::printf("%s", trace.c_str());
    const bool ordered = mean_loss[0] <= mean_loss[1] && mean_loss[1] <= mean_loss[2];
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "ablation mean final loss: inter_subnet %.6f %s minus_2nd %.6f %s minus_both "
                  "%.6f (%zu seeds) -> ordering %s",
                  mean_loss[0], mean_loss[0] <= mean_loss[1] ? "<=" : ">", mean_loss[1],
                  mean_loss[1] <= mean_loss[2] ? "<=" : ">", mean_loss[2], n_seeds,
                  ordered ? "holds" : "inverted");
    report(6, true, buf, /*gated=*/false);
  }

  // ---- criterion 7: determinism through the CLI ----
  {
    const char* tool = std::getenv("ISNET_TOOL");
    bool ok = false;
    std::string detail;
    if (!tool) {
      detail = "ISNET_TOOL not set (run via ctest)";
    } else {
      const std::string cfg_text =
          "variant=inter_subnet\nwin_len=64\nhop=32\nn=4\n"
          "subinter1_h=16\nsubinter2_h=16\nlstm_hidden=64\n"
          "lr=1e-3\nsteps=30\nbatch=2\nT=96\nsnr_min=-5\nsnr_max=20\n"
          "seed=77\nckpt_every=0\n";
      for (const char* run : {"detA", "detB"}) {
        std::ofstream f(work / (std::string(run) + ".cfg"));
        f << cfg_text << "out_dir=" << (work / run).string() << "\n";
      }
      auto shell = [&](const std::string& cmd) { return std::system(cmd.c_str()); };
      const int rc1 = shell(std::string(tool) + " train --config " + (work / "detA.cfg").string() +
                            " --deterministic > /dev/null 2>&1");
      const int rc2 = shell(std::string(tool) + " train --config " + (work / "detB.cfg").string() +
                            " --deterministic > /dev/null 2>&1");
      auto slurp = [](const std::filesystem::path& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
      };
      const std::string ck_a = slurp(work / "detA" / "ckpt_final.isn");
      const std::string ck_b = slurp(work / "detB" / "ckpt_final.isn");
      const std::string log_a = slurp(work / "detA" / "loss_log.csv");
      const std::string log_b = slurp(work / "detB" / "loss_log.csv");
      ok = rc1 == 0 && rc2 == 0 && !ck_a.empty() && ck_a == ck_b && !log_a.empty() &&
           log_a == log_b;
      detail = "two --deterministic runs: checkpoints " +
               std::string(ck_a == ck_b && !ck_a.empty() ? "identical" : "DIFFER") +
               ", loss logs " +
               std::string(log_a == log_b && !log_a.empty() ? "identical" : "DIFFER");
    }
    report(7, ok, detail);
  }

  std::error_code ec;
  std::filesystem::remove_all(work, ec);

  if (g_failures == 0) {
    std::printf("acceptance: all gated criteria passed\n");
  } else {
    std::printf("acceptance: %d gated criteria FAILED\n", g_failures);
  }
  (void)crit5_delta;
  return g_failures == 0 ? 0 : 1;
}
