// isnet: train, run and inspect the subband-interaction speech denoiser.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.
#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "isnet/isnet.hpp"

namespace {

int cmd_train(const std::string& config_path, const std::string& resume,
              const std::vector<std::pair<std::string, std::string>>& overrides,
              bool deterministic) {
  if (!std::filesystem::exists(config_path)) {
    std::cerr << "error: config file not found: " << config_path << "\n";
    return 2;
  }
  isnet::TrainConfig cfg = isnet::load_train_config(config_path);
  for (const auto& [k, v] : overrides) isnet::apply_config_entry(cfg, k, v);
  if (deterministic) cfg.threads = 1;

  std::cout << "variant=" << isnet::to_string(cfg.model.variant)
            << " params=" << isnet::with_commas(isnet::config_param_count(cfg.model))
            << " steps=" << cfg.steps << " batch=" << cfg.batch << " lr=" << cfg.lr
            << " seed=" << cfg.seed << " out_dir=" << cfg.out_dir << "\n";

  isnet::TrainResult res = isnet::train(cfg, resume, [](std::size_t step, float loss) {
    if (step % 25 == 0) std::cout << "step " << step << "  loss " << loss << "\n";
  });
  std::cout << "final checkpoint: " << res.final_checkpoint << "\n";
  std::cout << "loss log: " << cfg.out_dir << "/loss_log.csv\n";
  return 0;
}

int cmd_enhance(const std::string& ckpt, const std::string& in_path,
                const std::string& out_path) {
  isnet::LoadedModel<float> loaded = isnet::load_checkpoint<float>(ckpt);
  isnet::AudioSignal in = isnet::read_wav(in_path);
  isnet::AudioSignal out = isnet::enhance_signal(in, *loaded.model);
  isnet::WavWriteStats stats = isnet::write_wav(out_path, out);
  std::cout << "enhanced " << in.samples.size() << " samples -> " << out_path << "\n";
  if (stats.clipped > 0)
    std::cout << "warning: " << stats.clipped << " samples clipped on write\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, std::uint64_t seed, std::size_t items, double snr_min,
             double snr_max, const std::string& csv_out) {
  isnet::LoadedModel<float> loaded = isnet::load_checkpoint<float>(ckpt);
  isnet::MixSpec spec;
  spec.seed = seed;
  spec.snr_min = snr_min;
  spec.snr_max = snr_max;
  spec.win_len = loaded.cfg.win_len;
  spec.hop = loaded.cfg.hop;
  isnet::EvalReport rep = isnet::evaluate(*loaded.model, spec, items);
  const std::string csv = isnet::eval_report_csv(rep);
  if (csv_out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(csv_out, std::ios::trunc);
    f << csv;
    if (!f) throw std::runtime_error("eval: cannot write " + csv_out);
  }
  std::cout << isnet::eval_report_summary(rep) << "\n";
  return 0;
}

int cmd_verify(int seeds, const std::string& corrupt_op) {
  isnet::SelfcheckOptions opt;
  opt.grad_seeds = seeds;
  opt.corrupt_op = corrupt_op;
  const auto results = isnet::run_selfcheck(opt);
  for (const auto& r : results) std::cout << isnet::format_check_line(r) << "\n";
  const bool ok = isnet::all_pass(results);
  std::cout << (ok ? "all checks passed" : "CHECKS FAILED") << "\n";
  return ok ? 0 : 1;
}

int cmd_inspect(const std::string& ckpt) {
  isnet::LoadedModel<float> loaded = isnet::load_checkpoint<float>(ckpt);
  const isnet::ModelConfig& cfg = loaded.cfg;
  std::cout << "variant: " << isnet::to_string(cfg.variant) << "\n";
  std::cout << "stft: win_len=" << cfg.win_len << " hop=" << cfg.hop << " bins=" << cfg.bins
            << "\n";
  std::cout << "subband: n=" << cfg.n << " unit_width=" << cfg.unit_width()
            << " boundary=" << isnet::to_string(cfg.boundary) << "\n";
  std::cout << "adam state: " << (loaded.has_adam ? "present" : "absent")
            << ", train step: " << (loaded.has_train_state ? std::to_string(loaded.train.step)
                                                           : std::string("n/a"))
            << "\n\n";
  std::uint64_t total = 0;
  for (const auto& layer : isnet::describe(cfg)) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-16s %-52s %12s\n", layer.name.c_str(),
                  layer.shape.c_str(), isnet::with_commas(layer.params).c_str());
    std::cout << buf;
    total += layer.params;
  }
  const std::uint64_t actual = loaded.model->store().param_count();
  std::cout << "\ntotal parameters: " << isnet::with_commas(actual) << " ("
            << isnet::in_millions(actual) << ")\n";
  if (actual != total) {
    std::cerr << "error: checkpoint parameters (" << isnet::with_commas(actual)
              << ") disagree with layer map (" << isnet::with_commas(total) << ")\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subband-interaction speech denoiser"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a model from a key=value config file");
  std::string config_path, resume;
  std::vector<std::string> set_kv;
  bool deterministic = false;
  train->add_option("--config", config_path, "config file path")->required();
  train->add_option("--resume", resume, "checkpoint to resume from");
  train->add_option("--set", set_kv, "override a config entry, key=value (repeatable)");
  std::string steps_ov, seed_ov, lr_ov, outdir_ov, variant_ov, threads_ov;
  train->add_option("--steps", steps_ov, "override steps");
  train->add_option("--seed", seed_ov, "override seed");
  train->add_option("--lr", lr_ov, "override learning rate");
  train->add_option("--out-dir", outdir_ov, "override output directory");
  train->add_option("--variant", variant_ov, "override model variant");
  train->add_option("--threads", threads_ov, "override worker thread count");
  train->add_flag("--deterministic", deterministic, "single-threaded, fixed reduction order");

  // enhance
  auto* enhance = app.add_subcommand("enhance", "denoise a 16 kHz mono wav file");
  std::string ckpt, in_wav, out_wav;
  enhance->add_option("--ckpt", ckpt, "checkpoint path")->required();
  enhance->add_option("--in", in_wav, "input wav")->required();
  enhance->add_option("--out", out_wav, "output wav")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on synthetic mixtures");
  std::string eval_ckpt, eval_csv;
  std::uint64_t eval_seed = 0;
  std::size_t eval_items = 50;
  double eval_snr_min = -5.0, eval_snr_max = 20.0;
  eval->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
  eval->add_option("--seed", eval_seed, "evaluation seed")->required();
  eval->add_option("--items", eval_items, "number of utterances");
  eval->add_option("--snr-min", eval_snr_min, "minimum mixture SNR in dB");
  eval->add_option("--snr-max", eval_snr_max, "maximum mixture SNR in dB");
  eval->add_option("--out", eval_csv, "write the per-utterance table to this CSV file");

  // verify
  auto* verify = app.add_subcommand("verify", "run the gradient/invariant self-checks");
  int verify_seeds = 20;
  std::string corrupt_op;
  verify->add_option("--seeds", verify_seeds, "random seeds per gradient check");
  verify->add_option("--corrupt", corrupt_op, "")->group("");  // test hook, hidden

  // inspect
  auto* inspect = app.add_subcommand("inspect", "print a checkpoint's layer map");
  std::string inspect_ckpt;
  inspect->add_option("--ckpt", inspect_ckpt, "checkpoint path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) {
      std::vector<std::pair<std::string, std::string>> overrides;
      for (const auto& kv : set_kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
          std::cerr << "error: --set expects key=value, got: " << kv << "\n";
          return 2;
        }
        overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (!steps_ov.empty()) overrides.emplace_back("steps", steps_ov);
      if (!seed_ov.empty()) overrides.emplace_back("seed", seed_ov);
      if (!lr_ov.empty()) overrides.emplace_back("lr", lr_ov);
      if (!outdir_ov.empty()) overrides.emplace_back("out_dir", outdir_ov);
      if (!variant_ov.empty()) overrides.emplace_back("variant", variant_ov);
      if (!threads_ov.empty()) overrides.emplace_back("threads", threads_ov);
      return cmd_train(config_path, resume, overrides, deterministic);
    }
    if (enhance->parsed()) return cmd_enhance(ckpt, in_wav, out_wav);
    if (eval->parsed())
      return cmd_eval(eval_ckpt, eval_seed, eval_items, eval_snr_min, eval_snr_max, eval_csv);
    if (verify->parsed()) return cmd_verify(verify_seeds, corrupt_op);
    if (inspect->parsed()) return cmd_inspect(inspect_ckpt);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
