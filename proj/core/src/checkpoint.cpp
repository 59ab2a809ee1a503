#include "comatch/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "comatch/errors.hpp"

namespace comatch {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "comatch-checkpoint-v1";

json params_to_json(const ModelParams& params) {
  json out = json::object();
  const auto& names = ModelParams::layer_names();
  auto layers = params.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = *layers[l];
    out[names[l] + ".weight"] = {
        {"shape", {layer.out_dim, layer.in_dim}},
        {"data", layer.weight},
    };
    out[names[l] + ".bias"] = {
        {"shape", {layer.out_dim}},
        {"data", layer.bias},
    };
  }
  return out;
}

void params_from_json(const json& in, ModelParams& params) {
  const auto& names = ModelParams::layer_names();
  auto layers = params.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    DenseLayer& layer = *layers[l];
    const json& w = in.at(names[l] + ".weight");
    const json& b = in.at(names[l] + ".bias");
    if (w.at("shape") != json({layer.out_dim, layer.in_dim}) ||
        b.at("shape") != json({layer.out_dim})) {
      throw parse_error("checkpoint: parameter shape mismatch for " + names[l]);
    }
    layer.weight = w.at("data").get<Vec>();
    layer.bias = b.at("data").get<Vec>();
  }
}

json shape_to_json(const ModelShape& s) {
  return {{"input_dim", s.input_dim}, {"hidden", s.hidden},
          {"feature", s.feature},     {"proj_hidden", s.proj_hidden},
          {"embed_dim", s.embed_dim}, {"classes", s.classes}};
}

ModelShape shape_from_json(const json& in) {
  ModelShape s;
  s.input_dim = in.at("input_dim").get<std::size_t>();
  s.hidden = in.at("hidden").get<std::size_t>();
  s.feature = in.at("feature").get<std::size_t>();
  s.proj_hidden = in.at("proj_hidden").get<std::size_t>();
  s.embed_dim = in.at("embed_dim").get<std::size_t>();
  s.classes = in.at("classes").get<std::size_t>();
  return s;
}

json hyper_to_json(const HyperParams& hp) {
  return {{"B", hp.labeled_batch},
          {"mu", hp.mu},
          {"lambda_cls", hp.lambda_cls},
          {"lambda_ctr", hp.lambda_ctr},
          {"alpha", hp.alpha},
          {"K", hp.bank_capacity},
          {"t", hp.temperature},
          {"tau", hp.tau},
          {"T", hp.graph_threshold},
          {"lr0", hp.lr0},
          {"sgd_momentum", hp.sgd_momentum},
          {"weight_decay", hp.weight_decay},
          {"epochs", hp.epochs},
          {"ema_m", hp.ema_momentum},
          {"da_rho", hp.da_rho},
          {"da_enabled", hp.da_enabled},
          {"mode", to_string(hp.mode)},
          {"sigma_weak", hp.augment.sigma_weak},
          {"sigma_strong", hp.augment.sigma_strong},
          {"mask_prob", hp.augment.mask_prob}};
}

HyperParams hyper_from_json(const json& in) {
  HyperParams hp;
  hp.labeled_batch = in.at("B").get<std::size_t>();
  hp.mu = in.at("mu").get<std::size_t>();
  hp.lambda_cls = in.at("lambda_cls").get<double>();
  hp.lambda_ctr = in.at("lambda_ctr").get<double>();
  hp.alpha = in.at("alpha").get<double>();
  hp.bank_capacity = in.at("K").get<std::size_t>();
  hp.temperature = in.at("t").get<double>();
  hp.tau = in.at("tau").get<double>();
  hp.graph_threshold = in.at("T").get<double>();
  hp.lr0 = in.at("lr0").get<double>();
  hp.sgd_momentum = in.at("sgd_momentum").get<double>();
  hp.weight_decay = in.at("weight_decay").get<double>();
  hp.epochs = in.at("epochs").get<std::size_t>();
  hp.ema_momentum = in.at("ema_m").get<double>();
  hp.da_rho = in.at("da_rho").get<double>();
  hp.da_enabled = in.at("da_enabled").get<bool>();
  hp.mode = train_mode_from_string(in.at("mode").get<std::string>());
  hp.augment.sigma_weak = in.at("sigma_weak").get<double>();
  hp.augment.sigma_strong = in.at("sigma_strong").get<double>();
  hp.augment.mask_prob = in.at("mask_prob").get<double>();
  return hp;
}

}  // namespace

void save_checkpoint(const TrainState& state, const HyperParams& hyper,
                     const std::string& path) {
  json bank_entries = json::array();
  for (std::size_t i = 0; i < state.bank.size(); ++i) {
    const BankEntry& e = state.bank.entry(i);
    bank_entries.push_back({{"p", e.p.values()},
                            {"z", e.z.values()},
                            {"labeled", e.labeled}});
  }
  json queue_entries = json::array();
  for (std::size_t i = 0; i < state.queue.size(); ++i) {
    const QueueEntry& e = state.queue.entry(i);
    queue_entries.push_back({{"q", e.q.values()}, {"z", e.z.values()}});
  }
  json doc = {
      {"format", kFormat},
      {"shape", shape_to_json(state.params.shape)},
      {"hyper", hyper_to_json(hyper)},
      {"params", params_to_json(state.params)},
      {"ema", params_to_json(state.ema.params)},
      {"ema_momentum", state.ema.momentum},
      {"velocity", params_to_json(state.velocity)},
      {"bank",
       {{"capacity", state.bank.capacity()}, {"entries", bank_entries}}},
      {"queue",
       {{"capacity", state.queue.capacity()},
        {"entries", queue_entries},
        {"last_batch_positions", state.queue.last_batch_positions()}}},
      {"aligner",
       {{"rho", state.aligner.rho()},
        {"running_mean", state.aligner.running_mean().values()}}},
      {"step", state.step},
      {"total_steps", state.total_steps},
      {"rng", state.rng.serialize()},
  };
  std::ofstream out(path);
  if (!out) {
    throw parse_error("save_checkpoint: cannot open " + path);
  }
  out << doc.dump(2) << "\n";
  if (!out) {
    throw parse_error("save_checkpoint: write failure on " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw parse_error("load_checkpoint: cannot open " + path);
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw parse_error("load_checkpoint: " + path + ": " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat) {
      throw parse_error("load_checkpoint: unknown format");
    }
    const ModelShape shape = shape_from_json(doc.at("shape"));
    const HyperParams hyper = hyper_from_json(doc.at("hyper"));

    ModelParams params(shape);
    params_from_json(doc.at("params"), params);
    ModelParams ema_params(shape);
    params_from_json(doc.at("ema"), ema_params);
    ModelParams velocity(shape);
    params_from_json(doc.at("velocity"), velocity);

    MemoryBank bank(doc.at("bank").at("capacity").get<std::size_t>());
    for (const json& e : doc.at("bank").at("entries")) {
      bank.push(BankEntry{SimplexVector(e.at("p").get<Vec>()),
                          UnitVector(e.at("z").get<Vec>()),
                          e.at("labeled").get<bool>()});
    }
    MomentumQueue queue(doc.at("queue").at("capacity").get<std::size_t>());
    std::vector<QueueEntry> queue_entries;
    for (const json& e : doc.at("queue").at("entries")) {
      queue_entries.push_back(QueueEntry{SimplexVector(e.at("q").get<Vec>()),
                                         UnitVector(e.at("z").get<Vec>())});
    }
    queue.push(std::move(queue_entries));
    queue.restore_last_batch_positions(
        doc.at("queue").at("last_batch_positions").get<std::vector<std::size_t>>());

    DistributionAligner aligner(
        SimplexVector(doc.at("aligner").at("running_mean").get<Vec>()),
        doc.at("aligner").at("rho").get<double>());

    TrainState state(std::move(params),
                     EmaParams{std::move(ema_params),
                               doc.at("ema_momentum").get<double>()},
                     std::move(velocity), std::move(bank), std::move(queue),
                     std::move(aligner), doc.at("step").get<std::size_t>(),
                     doc.at("total_steps").get<std::size_t>(),
                     Rng::deserialize(doc.at("rng").get<std::string>()));
    return Checkpoint{std::move(state), hyper};
  } catch (const json::exception& e) {
    throw parse_error("load_checkpoint: " + path + ": " + e.what());
  }
}

}  // namespace comatch
