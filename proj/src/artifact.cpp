#include "kipps/artifact.hpp"

#include <fstream>

#include "json.hpp"
#include "kipps/error.hpp"
#include "kipps/rng.hpp"

namespace kipps {

namespace {

using nlohmann::json;

json params_to_json(const ParamSet& params) {
  json j = json::array();
  for (const auto& name : params.names()) {
    const Tensor& t = params.at(name);
    j.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}, {"data", t.data}});
  }
  return j;
}

ParamSet params_from_json(const json& j) {
  ParamSet params;
  for (const auto& jp : j) {
    Tensor t(jp.at("rows").get<std::size_t>(), jp.at("cols").get<std::size_t>());
    t.data = jp.at("data").get<std::vector<double>>();
    t.check_invariants();
    params.add(jp.at("name").get<std::string>(), std::move(t));
  }
  return params;
}

json mlp_spec_to_json(const MlpSpec& spec) {
  const char* act = spec.activation == Activation::leaky_relu
                        ? "leaky_relu"
                        : (spec.activation == Activation::tanh_act ? "tanh" : "softplus");
  return {{"input_dim", spec.input_dim},
          {"hidden", spec.hidden},
          {"output_dim", spec.output_dim},
          {"activation", act}};
}

MlpSpec mlp_spec_from_json(const json& j) {
  MlpSpec spec;
  spec.input_dim = j.at("input_dim").get<std::size_t>();
  spec.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  spec.output_dim = j.at("output_dim").get<std::size_t>();
  const std::string act = j.at("activation").get<std::string>();
  spec.activation = act == "leaky_relu" ? Activation::leaky_relu
                    : act == "tanh"     ? Activation::tanh_act
                                        : Activation::softplus;
  return spec;
}

json encodings_to_json(const std::vector<ContinuousEncoding>& encodings) {
  json j = json::array();
  for (const auto& enc : encodings) {
    json modes = json::array();
    for (const auto& m : enc.modes)
      modes.push_back({{"weight", m.weight}, {"mean", m.mean}, {"stdev", m.stdev}});
    j.push_back({{"column", enc.column}, {"modes", modes}, {"degenerate", enc.degenerate}});
  }
  return j;
}

std::vector<ContinuousEncoding> encodings_from_json(const json& j) {
  std::vector<ContinuousEncoding> out;
  for (const auto& je : j) {
    ContinuousEncoding enc;
    enc.column = je.at("column").get<std::string>();
    enc.degenerate = je.at("degenerate").get<bool>();
    for (const auto& jm : je.at("modes"))
      enc.modes.push_back({jm.at("weight").get<double>(), jm.at("mean").get<double>(),
                           jm.at("stdev").get<double>()});
    out.push_back(std::move(enc));
  }
  return out;
}

json config_to_json(const TrainingConfig& cfg) {
  json j{{"epochs", cfg.epochs},
         {"batch_size", cfg.batch_size},
         {"n_critic", cfg.n_critic},
         {"lambda_gp", cfg.lambda_gp},
         {"rule_weight", cfg.rule_weight},
         {"gumbel_tau", cfg.gumbel_tau},
         {"learning_rate", cfg.learning_rate},
         {"adam_beta1", cfg.adam_beta1},
         {"adam_beta2", cfg.adam_beta2},
         {"noise_dim", cfg.noise_dim},
         {"gen_hidden", cfg.gen_hidden},
         {"crit_hidden", cfg.crit_hidden},
         {"gmm_max_modes", cfg.gmm_max_modes},
         {"gmm_weight_threshold", cfg.gmm_weight_threshold},
         {"seed", cfg.seed}};
  if (cfg.dp) {
    json dp{{"clip_norm", cfg.dp->clip_norm},
            {"noise_multiplier", cfg.dp->noise_multiplier},
            {"sampling_rate", cfg.dp->sampling_rate},
            {"delta", cfg.dp->delta}};
    if (cfg.dp->epsilon_ceiling) dp["epsilon_ceiling"] = *cfg.dp->epsilon_ceiling;
    j["dp"] = dp;
  }
  return j;
}

TrainingConfig config_from_json(const json& j) {
  TrainingConfig cfg;
  cfg.epochs = j.at("epochs").get<int>();
  cfg.batch_size = j.at("batch_size").get<std::size_t>();
  cfg.n_critic = j.at("n_critic").get<int>();
  cfg.lambda_gp = j.at("lambda_gp").get<double>();
  cfg.rule_weight = j.at("rule_weight").get<double>();
  cfg.gumbel_tau = j.at("gumbel_tau").get<double>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.adam_beta1 = j.at("adam_beta1").get<double>();
  cfg.adam_beta2 = j.at("adam_beta2").get<double>();
  cfg.noise_dim = j.at("noise_dim").get<std::size_t>();
  cfg.gen_hidden = j.at("gen_hidden").get<std::vector<std::size_t>>();
  cfg.crit_hidden = j.at("crit_hidden").get<std::vector<std::size_t>>();
  cfg.gmm_max_modes = j.at("gmm_max_modes").get<std::size_t>();
  cfg.gmm_weight_threshold = j.at("gmm_weight_threshold").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("dp")) {
    DpConfig dp;
    dp.clip_norm = j["dp"].at("clip_norm").get<double>();
    dp.noise_multiplier = j["dp"].at("noise_multiplier").get<double>();
    dp.sampling_rate = j["dp"].at("sampling_rate").get<double>();
    dp.delta = j["dp"].at("delta").get<double>();
    if (j["dp"].contains("epsilon_ceiling"))
      dp.epsilon_ceiling = j["dp"]["epsilon_ceiling"].get<double>();
    cfg.dp = dp;
  }
  return cfg;
}

json layout_to_json(const RowEncodingLayout& layout) {
  json segments = json::array();
  for (const auto& seg : layout.segments) {
    const char* kind = seg.kind == SegmentKind::alpha             ? "alpha"
                       : seg.kind == SegmentKind::beta            ? "beta"
                       : seg.kind == SegmentKind::discrete_onehot ? "discrete"
                       : seg.kind == SegmentKind::mask_onehot     ? "mask"
                                                                  : "rule_flag";
    segments.push_back({{"id", seg.id},
                        {"source", seg.source},
                        {"kind", kind},
                        {"width", seg.width},
                        {"offset", seg.offset}});
  }
  return {{"segments", segments}, {"total_width", layout.total_width}};
}

RowEncodingLayout layout_from_json(const json& j) {
  RowEncodingLayout layout;
  layout.total_width = j.at("total_width").get<std::size_t>();
  for (const auto& js : j.at("segments")) {
    Segment seg;
    seg.id = js.at("id").get<std::string>();
    seg.source = js.at("source").get<std::string>();
    const std::string kind = js.at("kind").get<std::string>();
    seg.kind = kind == "alpha"      ? SegmentKind::alpha
               : kind == "beta"     ? SegmentKind::beta
               : kind == "discrete" ? SegmentKind::discrete_onehot
               : kind == "mask"     ? SegmentKind::mask_onehot
                                    : SegmentKind::rule_flag_onehot;
    seg.width = js.at("width").get<std::size_t>();
    seg.offset = js.at("offset").get<std::size_t>();
    layout.segments.push_back(std::move(seg));
  }
  for (std::size_t i = 0; i < layout.segments.size(); ++i) {
    const SegmentKind k = layout.segments[i].kind;
    if (k == SegmentKind::discrete_onehot || k == SegmentKind::mask_onehot ||
        k == SegmentKind::rule_flag_onehot) {
      layout.selectable.push_back(i);
      layout.cond_offsets.push_back(layout.cond_width);
      layout.cond_width += layout.segments[i].width;
    }
  }
  return layout;
}

json state_to_json(const TrainState& st) {
  json history = json::array();
  for (const auto& rec : st.history)
    history.push_back({{"critic", rec.critic}, {"generator", rec.generator}, {"rule_ce", rec.rule_ce}});
  return {{"gen_params", params_to_json(st.gen.params)},
          {"gen_spec", mlp_spec_to_json(st.gen.spec)},
          {"noise_dim", st.gen.noise_dim},
          {"crit_params", params_to_json(st.crit.params)},
          {"crit_spec", mlp_spec_to_json(st.crit.spec)},
          {"epochs_done", st.epochs_done},
          {"steps_done", st.steps_done},
          {"dp_enabled", st.dp_enabled},
          {"budget_exhausted", st.budget_exhausted},
          {"accountant",
           {{"orders", st.accountant.orders},
            {"accumulated_rdp", st.accountant.accumulated_rdp},
            {"steps", st.accountant.steps}}},
          {"history", history}};
}

TrainState state_from_json(const json& j) {
  TrainState st;
  st.gen.params = params_from_json(j.at("gen_params"));
  st.gen.spec = mlp_spec_from_json(j.at("gen_spec"));
  st.gen.noise_dim = j.at("noise_dim").get<std::size_t>();
  st.crit.params = params_from_json(j.at("crit_params"));
  st.crit.spec = mlp_spec_from_json(j.at("crit_spec"));
  st.epochs_done = j.at("epochs_done").get<std::int64_t>();
  st.steps_done = j.at("steps_done").get<std::int64_t>();
  st.dp_enabled = j.at("dp_enabled").get<bool>();
  st.budget_exhausted = j.at("budget_exhausted").get<bool>();
  st.accountant.orders = j.at("accountant").at("orders").get<std::vector<double>>();
  st.accountant.accumulated_rdp =
      j.at("accountant").at("accumulated_rdp").get<std::vector<double>>();
  st.accountant.steps = j.at("accountant").at("steps").get<std::int64_t>();
  for (const auto& jr : j.at("history"))
    st.history.push_back({jr.at("critic").get<double>(), jr.at("generator").get<double>(),
                          jr.at("rule_ce").get<double>()});
  return st;
}

std::string fingerprint_of(const json& body) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(body.dump())));
  return std::string(buf);
}

}  // namespace

void save_model(const Synthesizer& model, const std::string& path) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["schema"] = json::parse(schema_to_json_string(model.original_schema));
  j["masked_schema"] = json::parse(schema_to_json_string(model.masked_schema));
  j["rules"] = json::parse(rules_to_json_string(model.rules, /*include_observed=*/true));
  j["rules_hash"] = rules_fingerprint(model.rules);
  j["encodings"] = encodings_to_json(model.encodings);
  j["layout"] = layout_to_json(model.layout);
  j["cond_counts"] = model.cond_counts;
  j["config"] = config_to_json(model.config);
  j["state"] = state_to_json(model.state);
  const std::string fp = fingerprint_of(j);
  j["fingerprint"] = fp;

  std::ofstream out(path);
  if (!out) fail_data("cannot write model file '" + path + "'");
  out << j.dump() << '\n';
}

Synthesizer load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::fingerprint, "model file '" + path + "' is not parseable: " + e.what());
  }
  if (!j.contains("format_version") ||
      j["format_version"].get<std::string>() != kModelFormatVersion)
    fail_data("model file '" + path + "' has an unsupported format version");

  const std::string stored = j.value("fingerprint", "");
  json body = j;
  body.erase("fingerprint");
  if (fingerprint_of(body) != stored)
    throw Error(Errc::fingerprint, "model file '" + path + "' failed fingerprint verification");

  try {
    Synthesizer model;
    model.original_schema = schema_from_json_string(j.at("schema").dump());
    model.masked_schema = schema_from_json_string(j.at("masked_schema").dump());
    model.rules = rules_from_json_string(j.at("rules").dump());
    model.encodings = encodings_from_json(j.at("encodings"));
    model.layout = layout_from_json(j.at("layout"));
    model.cond_counts = j.at("cond_counts").get<std::vector<std::vector<std::int64_t>>>();
    model.config = config_from_json(j.at("config"));
    model.state = state_from_json(j.at("state"));
    return model;
  } catch (const nlohmann::json::exception& e) {
    fail_data("model file '" + path + "' is missing fields: " + std::string(e.what()));
  }
}

std::string model_fingerprint(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::fingerprint, "model file '" + path + "' is not parseable: " + e.what());
  }
  return j.value("fingerprint", "");
}

}  // namespace kipps
