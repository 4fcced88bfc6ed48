#include "lpbias/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "lpbias/error.hpp"

namespace lpbias {

using nlohmann::json;

json to_json(const BackendDescriptor& d) {
  return {{"name", d.name},
          {"kind", std::string(to_string(d.kind))},
          {"vocabulary_size", d.vocabulary_size},
          {"embedding_dimension", d.embedding_dimension}};
}

json to_json(const stats::PermutationConfig& c) {
  return {{"exact_threshold", c.exact_threshold},
          {"monte_carlo_samples", c.monte_carlo_samples},
          {"seed", c.seed}};
}

json to_json(const BiasTestResult& r) {
  json items = json::array();
  for (const auto& i : r.items) items.push_back({{"item", i.item}, {"group", i.group}, {"value", i.value}});
  json records = json::array();
  for (const auto& a : r.records)
    records.push_back({{"template", a.template_id},
                       {"target", a.target},
                       {"attribute", a.attribute},
                       {"p_tgt", a.p_tgt},
                       {"p_prior", a.p_prior},
                       {"increased_log_probability", a.score}});
  return {{"kind", r.kind},
          {"category", r.category},
          {"statistic", r.statistic},
          {"effect_size", r.effect_size},
          {"p_value", r.p_value},
          {"exact", r.exact},
          {"n_permutations", r.n_permutations_used},
          {"seed", r.seed},
          {"items", items},
          {"records", records},
          {"metadata", r.metadata}};
}

json to_json(const NeitherGapReport& r) {
  return {{"n_male", r.n_male},
          {"n_female", r.n_female},
          {"gold_neither_male", r.prior_male},
          {"gold_neither_female", r.prior_female},
          {"mean_neither_male", r.mean_male},
          {"mean_neither_female", r.mean_female},
          {"statistic", r.statistic},
          {"p_value", r.p_value},
          {"exact", r.exact},
          {"n_permutations", r.n_permutations_used}};
}

json to_json(const TopicBiasReport& r) {
  json topics = json::array();
  for (const auto& t : r.topics) {
    json terms = json::array();
    for (const auto& [term, s] : t.terms) terms.push_back({{"term", term}, {"score", s}});
    topics.push_back({{"bias", t.bias}, {"terms", terms}, {"dropped", t.dropped}});
  }
  json samples = json::array();
  for (const auto& [id, b] : r.sample_bias) samples.push_back({{"id", id}, {"bias", b}});
  json out = {{"topics", topics}, {"samples", samples}, {"n_correlated", r.n_correlated}};
  if (r.spearman) {
    out["spearman"] = {{"rho", r.spearman->rho}, {"p_value", r.spearman->p_value}};
  } else {
    out["spearman"] = nullptr;
    out["spearman_note"] = r.spearman_note;
  }
  return out;
}

json to_json(const EmploymentReport& r) {
  json scores = json::array();
  for (const auto& [a, s] : r.scores) scores.push_back({{"attribute", a}, {"score", s}});
  return {{"template", r.template_text},
          {"percentage_male", r.percentage_male},
          {"n_input", r.n_input},
          {"n_scored", r.scores.size()},
          {"dropped_multi_token", r.dropped_multi_token},
          {"dropped_oov", r.dropped_oov},
          {"scores", scores}};
}

json to_json(const GprPipelineResult& r, const GprModelConfig& model) {
  json samples = json::array();
  for (std::size_t i = 0; i < r.examples.size(); ++i) {
    const auto& inst = r.examples[i].instance;
    const auto& p = r.probabilities[i];
    samples.push_back({{"id", inst.id},
                       {"gender", std::string(to_string(inst.gender))},
                       {"label", std::string(to_string(inst.label()))},
                       {"probabilities", {p[0], p[1], p[2]}}});
  }
  json out = {{"model", to_json(model)},
              {"training",
               {{"train_loss", r.history.train_loss},
                {"validation_loss", r.history.validation_loss},
                {"best_epoch", r.history.best_epoch},
                {"validation_size", r.history.validation_size}}},
              {"alignment_failures", r.alignment_failures},
              {"neither", to_json(r.neither)},
              {"samples", samples}};
  if (r.topics) out["topic_model"] = stats::topic_model_to_json(*r.topics);
  if (r.topic_bias) out["topic_bias"] = to_json(*r.topic_bias);
  return out;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_summary_csv(std::ostream& os, const std::vector<BiasTestResult>& results) {
  os << "category,statistic,effect-size,p-value,exact,n-permutations,seed\n";
  for (const auto& r : results) {
    char stat[32], eff[32], p[32];
    std::snprintf(stat, sizeof stat, "%.17g", r.statistic);
    std::snprintf(eff, sizeof eff, "%.17g", r.effect_size);
    std::snprintf(p, sizeof p, "%.17g", r.p_value);
    os << csv_field(r.category) << ',' << stat << ',' << eff << ',' << p << ','
       << (r.exact ? "true" : "false") << ',' << r.n_permutations_used << ',' << r.seed << '\n';
  }
}

std::string format_summary_table(const std::vector<BiasTestResult>& results) {
  std::ostringstream os;
  os << std::left << std::setw(28) << "category" << std::right << std::setw(12) << "statistic"
     << std::setw(10) << "effect" << std::setw(12) << "p" << "\n";
  for (const auto& r : results) {
    os << std::left << std::setw(28) << r.category << std::right << std::setw(12)
       << fixed(r.statistic, 4) << std::setw(10) << fixed(r.effect_size, 4) << std::setw(12)
       << fixed(r.p_value, 5) << (r.exact ? "" : " (mc)") << "\n";
  }
  return os.str();
}

std::string format_employment_table(const std::vector<EmploymentReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(32) << "template" << std::right << std::setw(10) << "male %"
     << std::setw(8) << "n" << std::setw(10) << "dropped" << "\n";
  for (const auto& r : reports) {
    os << std::left << std::setw(32) << r.template_text << std::right << std::setw(10)
       << fixed(r.percentage_male, 1) << std::setw(8) << r.scores.size() << std::setw(10)
       << (r.dropped_multi_token.size() + r.dropped_oov.size()) << "\n";
  }
  return os.str();
}

std::string format_gpr_table(const NeitherGapReport& r, const TopicBiasReport* topics) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "" << std::right << std::setw(8) << "n" << std::setw(14)
     << "gold NEITHER" << std::setw(16) << "mean P(NEITHER)" << "\n";
  os << std::left << std::setw(10) << "male" << std::right << std::setw(8) << r.n_male
     << std::setw(14) << fixed(r.prior_male, 4) << std::setw(16) << fixed(r.mean_male, 4) << "\n";
  os << std::left << std::setw(10) << "female" << std::right << std::setw(8) << r.n_female
     << std::setw(14) << fixed(r.prior_female, 4) << std::setw(16) << fixed(r.mean_female, 4)
     << "\n";
  os << "female - male = " << fixed(r.statistic, 5) << ", p = " << fixed(r.p_value, 5)
     << (r.exact ? " (exact)" : " (monte carlo)") << "\n";
  if (topics) {
    if (topics->spearman)
      os << "spearman rho = " << fixed(topics->spearman->rho, 4)
         << ", p = " << fixed(topics->spearman->p_value, 5) << " (n = " << topics->n_correlated
         << ")\n";
    else
      os << "spearman undefined: " << topics->spearman_note << "\n";
  }
  return os.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open input file: " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

void RunManifest::validate() const {
  if (command.empty()) throw SchemaError("manifest has no command");
  for (const auto& [path, digest] : input_digests)
    if (digest.size() != 64) throw SchemaError("manifest digest for " + path + " is malformed");
}

json to_json(const RunManifest& m) {
  return {{"command", m.command},
          {"arguments", m.arguments},
          {"backend", to_json(m.backend)},
          {"inputs", m.input_digests},
          {"seed", m.seed},
          {"permutation", to_json(m.permutation)},
          {"version", m.version},
          {"timestamp", m.timestamp}};
}

RunManifest manifest_from_json(const json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.arguments = j.at("arguments").get<std::vector<std::string>>();
    const auto& b = j.at("backend");
    m.backend.name = b.at("name").get<std::string>();
    auto kind = b.at("kind").get<std::string>();
    m.backend.kind = kind == "masked-lm"        ? BackendKind::masked_lm
                     : kind == "static-vectors" ? BackendKind::static_vectors
                                                : BackendKind::mock;
    m.backend.vocabulary_size = b.at("vocabulary_size").get<std::size_t>();
    m.backend.embedding_dimension = b.at("embedding_dimension").get<std::size_t>();
    m.input_digests = j.at("inputs").get<std::map<std::string, std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& p = j.at("permutation");
    m.permutation.exact_threshold = p.at("exact_threshold").get<std::uint64_t>();
    m.permutation.monte_carlo_samples = p.at("monte_carlo_samples").get<std::uint64_t>();
    m.permutation.seed = p.at("seed").get<std::uint64_t>();
    m.version = j.at("version").get<std::string>();
    m.timestamp = j.value("timestamp", "");
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("manifest: ") + e.what());
  }
}

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace lpbias
