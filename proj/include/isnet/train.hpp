// Training: config parsing, the Adam training loop with deterministic
// batch-parallel gradient reduction, loss logging and checkpointing.
#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "isnet/checkpoint.hpp"
#include "isnet/data.hpp"
#include "isnet/model.hpp"
#include "isnet/optim.hpp"

namespace isnet {

struct TrainConfig {
  ModelConfig model;
  double lr = 1e-3;
  std::size_t steps = 1000;
  std::size_t batch = 4;
  std::uint64_t seed = 1;
  double snr_min = -5.0, snr_max = 20.0;
  std::size_t frames = 192;
  std::size_t ckpt_every = 100;
  std::string out_dir = "run";
  unsigned threads = 0;  // 0 = pick from hardware

  MixSpec mix_spec() const {
    MixSpec m;
    m.snr_min = snr_min;
    m.snr_max = snr_max;
    m.frames = frames;
    m.seed = seed;
    m.win_len = model.win_len;
    m.hop = model.hop;
    return m;
  }
};

namespace detail {
inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  return (a == std::string::npos) ? "" : s.substr(a, b - a + 1);
}
}  // namespace detail

// Flat key=value config. Unknown keys are rejected by name.
inline void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& val) {
  if (key == "variant") cfg.model.variant = variant_from_string(val);
  else if (key == "win_len") {
    cfg.model.win_len = std::stoull(val);
    cfg.model.bins = cfg.model.win_len / 2 + 1;
  } else if (key == "hop") cfg.model.hop = std::stoull(val);
  else if (key == "n") cfg.model.n = std::stoull(val);
  else if (key == "boundary") cfg.model.boundary = boundary_from_string(val);
  else if (key == "subinter1_h") cfg.model.subinter1_h = std::stoull(val);
  else if (key == "subinter2_h") cfg.model.subinter2_h = std::stoull(val);
  else if (key == "lstm_hidden") cfg.model.lstm_hidden = std::stoull(val);
  else if (key == "gn_groups") cfg.model.gn_groups = std::stoull(val);
  else if (key == "lr") cfg.lr = std::stod(val);
  else if (key == "steps") cfg.steps = std::stoull(val);
  else if (key == "batch") cfg.batch = std::stoull(val);
  else if (key == "seed") cfg.seed = std::stoull(val);
  else if (key == "snr_min") cfg.snr_min = std::stod(val);
  else if (key == "snr_max") cfg.snr_max = std::stod(val);
  else if (key == "frames" || key == "T") cfg.frames = std::stoull(val);
  else if (key == "ckpt_every") cfg.ckpt_every = std::stoull(val);
  else if (key == "out_dir") cfg.out_dir = val;
  else if (key == "threads") cfg.threads = static_cast<unsigned>(std::stoul(val));
  else throw std::invalid_argument("config: unknown key: " + key);
}

inline TrainConfig parse_train_config(const std::string& text) {
  TrainConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not key=value: " + line);
    apply_config_entry(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return cfg;
}

inline TrainConfig load_train_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config file not found: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_train_config(text);
}

struct TrainResult {
  std::vector<std::pair<std::size_t, float>> loss_log;  // (step, batch loss)
  std::string final_checkpoint;
  double running_loss = 0.0;
  std::size_t steps_run = 0;
};

using TrainLogFn = std::function<void(std::size_t step, float loss)>;

// Runs the loop: batch -> forward -> MSE on compressed mask planes ->
// backward -> Adam. Per-item gradients are snapshotted and reduced in item
// order, so results are identical for any worker count.
inline TrainResult train(const TrainConfig& cfg, const std::string& resume_ckpt = "",
                         const TrainLogFn& log_fn = {}) {
  if (cfg.steps < 1) throw std::invalid_argument("train: steps must be >= 1");
  if (cfg.batch < 1) throw std::invalid_argument("train: batch must be >= 1");

  std::filesystem::create_directories(cfg.out_dir);
  const MixSpec mix = cfg.mix_spec();

  auto master = std::make_unique<Model<float>>(cfg.model, cfg.seed);
  Rng state_rng(cfg.seed);
  std::size_t start_step = 0;
  double running = 0.0;
  if (!resume_ckpt.empty()) {
    LoadedModel<float> loaded = load_checkpoint<float>(resume_ckpt);
    if (loaded.cfg.serialize() != cfg.model.serialize())
      throw std::runtime_error("train: resume checkpoint config does not match");
    if (!loaded.has_train_state)
      throw std::runtime_error("train: checkpoint has no train state to resume from");
    master->store().copy_values_from(loaded.model->store());
    master->store().adam_step = loaded.model->store().adam_step;
    for (std::size_t i = 0; i < master->store().count(); ++i) {
      master->store().at(i).m = loaded.model->store().at(i).m;
      master->store().at(i).v = loaded.model->store().at(i).v;
    }
    start_step = loaded.train.step;
    running = loaded.train.running_loss;
    state_rng.set_state(loaded.train.rng_state);
  }

  const unsigned threads = cfg.threads ? cfg.threads : default_threads();
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), cfg.batch);
  std::vector<std::unique_ptr<Model<float>>> clones;
  for (std::size_t w = 1; w < workers; ++w) {
    clones.push_back(std::make_unique<Model<float>>(cfg.model, cfg.seed));
    clones.back()->store().copy_values_from(master->store());
  }
  auto worker_model = [&](std::size_t w) -> Model<float>& {
    return (w == 0) ? *master : *clones[w - 1];
  };

  const std::uint64_t pcount = master->store().param_count();
  std::vector<std::vector<float>> item_grads(cfg.batch, std::vector<float>(pcount, 0.0f));
  std::vector<float> item_loss(cfg.batch, 0.0f);

  TrainResult result;
  AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};

  auto save_state = [&](const std::string& path, std::size_t step) {
    TrainStateInfo ts;
    ts.step = step;
    ts.running_loss = running;
    ts.rng_state = state_rng.state();
    save_checkpoint(path, cfg.model, master->store(), /*with_adam=*/true, &ts);
  };

  for (std::size_t step = start_step + 1; step <= cfg.steps; ++step) {
    Batch<float> batch = make_batch<float>(mix, cfg.batch, step);

    parallel_for(cfg.batch, static_cast<unsigned>(workers), [&](std::size_t i) {
      const std::size_t w = i % workers;
      Model<float>& m = worker_model(w);
      m.store().zero_grads();
      MaskPlanes<float> pred = m.forward(batch.mags[i], /*train=*/true);
      const float loss_r = mse_loss(pred.mr, batch.target_mr[i]);
      const float loss_i = mse_loss(pred.mi, batch.target_mi[i]);
      item_loss[i] = 0.5f * (loss_r + loss_i);
      // Each plane's MSE averages over F*T; average the two planes and the
      // batch items on top of that.
      const float scale = 0.5f / static_cast<float>(cfg.batch);
      Tensor<float> dmr = mse_grad(pred.mr, batch.target_mr[i], scale);
      Tensor<float> dmi = mse_grad(pred.mi, batch.target_mi[i], scale);
      m.backward(dmr, dmi);
      std::size_t off = 0;
      auto& ps = m.store();
      for (std::size_t p = 0; p < ps.count(); ++p) {
        const auto& g = ps.at(p).grad;
        std::copy(g.v.begin(), g.v.end(), item_grads[i].begin() + off);
        off += g.size();
      }
    });

    float loss = 0.0f;
    for (std::size_t i = 0; i < cfg.batch; ++i) loss += item_loss[i];
    loss /= static_cast<float>(cfg.batch);
    if (!std::isfinite(loss)) {
      std::string diag = "train: non-finite loss at step " + std::to_string(step) + ";";
      for (std::size_t p = 0; p < master->store().count() && p < 8; ++p) {
        const auto& pr = master->store().at(p);
        double norm = 0;
        for (float x : pr.value.v) norm += static_cast<double>(x) * x;
        diag += " |" + pr.name + "|=" + std::to_string(std::sqrt(norm));
      }
      throw std::runtime_error(diag);
    }

    // Deterministic reduction: item order, then Adam on the master.
    master->store().zero_grads();
    for (std::size_t i = 0; i < cfg.batch; ++i) {
      std::size_t off = 0;
      auto& ps = master->store();
      for (std::size_t p = 0; p < ps.count(); ++p) {
        auto& g = ps.at(p).grad;
        const float* src = item_grads[i].data() + off;
        for (std::size_t j = 0; j < g.size(); ++j) g.v[j] += src[j];
        off += g.size();
      }
    }
    adam_step(master->store(), adam);
    for (auto& clone : clones) clone->store().copy_values_from(master->store());

    running = (step == 1) ? loss : 0.95 * running + 0.05 * loss;
    result.loss_log.emplace_back(step, loss);
    if (log_fn) log_fn(step, loss);

    if (cfg.ckpt_every > 0 && step % cfg.ckpt_every == 0 && step != cfg.steps)
      save_state(cfg.out_dir + "/ckpt_" + std::to_string(step) + ".isn", step);
  }

  result.final_checkpoint = cfg.out_dir + "/ckpt_final.isn";
  save_state(result.final_checkpoint, cfg.steps);
  result.running_loss = running;
  result.steps_run = cfg.steps - start_step;

  std::ofstream log(cfg.out_dir + "/loss_log.csv", std::ios::trunc);
  if (!log) throw std::runtime_error("train: cannot write loss log in " + cfg.out_dir);
  log << "step,loss\n";
  char buf[64];
  for (const auto& [s, l] : result.loss_log) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", s, static_cast<double>(l));
    log << buf;
  }
  return result;
}

}  // namespace isnet
