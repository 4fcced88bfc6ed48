// lpbias: command-line front end for the bias measurement toolkit.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lpbias/audit.hpp"
#include "lpbias/backend.hpp"
#include "lpbias/bias_core.hpp"
#include "lpbias/error.hpp"
#include "lpbias/gap.hpp"
#include "lpbias/report.hpp"
#include "lpbias/stimuli.hpp"
#include "lpbias/topics.hpp"
#include "lpbias/weat.hpp"

namespace fs = std::filesystem;
using namespace lpbias;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kTransport = 2;

std::uint64_t default_seed() {
  if (const char* s = std::getenv("LPBIAS_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw ValidationError(std::string("LPBIAS_SEED is not an unsigned integer: ") + s);
    }
  }
  return 1;
}

struct Common {
  std::string backend;
  std::uint64_t seed = 1;
  std::uint64_t permutations = 10'000;
  std::uint64_t exact_threshold = 200'000;
  std::string out = "lpbias-out";
  std::size_t jobs = 1;

  stats::PermutationConfig permutation() const {
    stats::PermutationConfig c{exact_threshold, permutations, seed};
    stats::validate(c);
    return c;
  }
};

void add_common(CLI::App* app, Common& c, bool backend_required = true) {
  auto* b = app->add_option("--backend", c.backend,
                            "backend spec: mock:<file.json>, vectors:<file.txt>, http:<host>:<port>");
  if (backend_required) b->required();
  app->add_option("--seed", c.seed, "random seed (default $LPBIAS_SEED or 1)");
  app->add_option("--permutations", c.permutations,
                  "Monte Carlo samples when exact enumeration is too large");
  app->add_option("--exact-threshold", c.exact_threshold,
                  "enumerate all splits when their count is at most this");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--jobs", c.jobs, "maximum concurrent backend queries")->capture_default_str();
}

// Path of a file-backed backend spec, for the manifest digest.
std::string backend_file(const std::string& spec) {
  auto colon = spec.find(':');
  if (colon == std::string::npos) return {};
  auto kind = spec.substr(0, colon);
  if (kind == "mock" || kind == "vectors" || kind == "static") return spec.substr(colon + 1);
  return {};
}

RunManifest start_manifest(const std::string& command, const std::vector<std::string>& args,
                           const Common& c, const Backend& backend) {
  RunManifest m;
  m.command = command;
  m.arguments = args;
  m.backend = backend.descriptor();
  m.seed = c.seed;
  m.permutation = c.permutation();
  m.timestamp = utc_timestamp();
  if (auto f = backend_file(c.backend); !f.empty()) m.add_input(f);
  return m;
}

void prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir + ": " + ec.message());
}

// ---------------------------------------------------------------------------

struct ProbeArgs {
  Common common;
  std::vector<std::string> categories;
};

int cmd_probe(const ProbeArgs& a, const std::vector<std::string>& args) {
  auto backend = make_backend(a.common.backend);
  auto config = a.common.permutation();
  std::vector<WeatCategory> cats;
  for (const auto& path : a.categories) cats.push_back(load_category(path));

  std::vector<BiasTestResult> results;
  for (const auto& c : cats) results.push_back(run_category_test(*backend, c, config, a.common.jobs));

  auto manifest = start_manifest("probe", args, a.common, *backend);
  for (const auto& p : a.categories) manifest.add_input(p);

  prepare_out(a.common.out);
  nlohmann::json report = {{"kind", "log-prob"}, {"results", nlohmann::json::array()}};
  for (const auto& r : results) report["results"].push_back(to_json(r));
  write_json_file(a.common.out + "/probe.json", report);
  std::ofstream csv(a.common.out + "/summary.csv", std::ios::binary);
  write_summary_csv(csv, results);
  write_json_file(a.common.out + "/manifest.json", to_json(manifest));
  std::cout << format_summary_table(results);
  return kOk;
}

// ---------------------------------------------------------------------------

struct WeatArgs {
  Common common;
  std::vector<std::string> categories;
  std::string mode = "static";
  std::string filter_backend;
};

int cmd_weat(const WeatArgs& a, const std::vector<std::string>& args) {
  auto backend = make_backend(a.common.backend);
  auto config = a.common.permutation();
  if (a.mode == "static" && backend->descriptor().kind == BackendKind::masked_lm)
    throw ValidationError("static mode needs a static-vector or mock backend, got a masked-lm backend");
  std::unique_ptr<Backend> filter;
  if (!a.filter_backend.empty()) filter = make_backend(a.filter_backend);

  auto manifest = start_manifest("weat", args, a.common, *backend);
  if (auto f = backend_file(a.filter_backend); !f.empty()) manifest.add_input(f);

  std::vector<BiasTestResult> results;
  for (const auto& path : a.categories) {
    auto cat = load_category(path);
    manifest.add_input(path);
    auto in = a.mode == "static"
                  ? build_static_inputs(cat, *backend, filter.get(), a.common.seed)
                  : build_contextual_inputs(cat, *backend, a.common.seed, a.common.jobs);
    auto r = weat_test(in.x, in.y, in.a, in.b, config);
    r.category = cat.name;
    r.seed = a.common.seed;
    r.metadata = in.metadata;
    r.metadata["mode"] = a.mode;
    results.push_back(std::move(r));
  }

  prepare_out(a.common.out);
  nlohmann::json report = {{"kind", "weat"}, {"mode", a.mode}, {"results", nlohmann::json::array()}};
  for (const auto& r : results) report["results"].push_back(to_json(r));
  write_json_file(a.common.out + "/weat.json", report);
  std::ofstream csv(a.common.out + "/summary.csv", std::ios::binary);
  write_summary_csv(csv, results);
  write_json_file(a.common.out + "/manifest.json", to_json(manifest));
  std::cout << format_summary_table(results);
  return kOk;
}

// ---------------------------------------------------------------------------

struct GprArgs {
  Common common;
  std::string gap;
  std::string config;
  std::string stopwords = std::string(LPBIAS_DATA_DIR) + "/stopwords_en.txt";
  std::size_t topics = 20;
  std::size_t top_n = 15;
  std::size_t min_df = 2;
  std::size_t nmf_iterations = 200;
  bool no_topics = false;
  bool raw_weights = false;
  bool all_genders = false;
};

int cmd_gpr(const GprArgs& a, const std::vector<std::string>& args) {
  auto backend = make_backend(a.common.backend);
  GprPipelineOptions opts;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw ValidationError("cannot open model config: " + a.config);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(a.config, 0, e.what());
    }
    opts.model = gpr_config_from_json(j);
  }
  opts.model.seed = a.common.seed;
  opts.permutation = a.common.permutation();
  opts.nmf.k = a.topics;
  opts.nmf.max_iterations = a.nmf_iterations;
  opts.nmf.seed = a.common.seed;
  opts.topic_bias.top_n = a.top_n;
  opts.topic_bias.normalize_document_weights = !a.raw_weights;
  opts.topic_bias.female_only = !a.all_genders;
  opts.min_df = a.min_df;
  opts.run_topics = !a.no_topics;
  opts.jobs = a.common.jobs;
  if (opts.run_topics) opts.stopwords = load_stopwords(a.stopwords);

  auto data = load_gap(a.gap);
  for (const auto& d : data.skipped) std::cerr << a.gap << ":" << d.row << ": skipped: " << d.message << "\n";
  auto result = run_gpr_pipeline(*backend, data.instances, opts);
  for (const auto& f : result.alignment_failures) std::cerr << "alignment: " << f << "\n";

  auto manifest = start_manifest("gpr", args, a.common, *backend);
  manifest.add_input(a.gap);
  if (!a.config.empty()) manifest.add_input(a.config);
  if (opts.run_topics) manifest.add_input(a.stopwords);

  prepare_out(a.common.out);
  auto report = to_json(result, opts.model);
  report["dataset"] = {{"rows", data.instances.size() + data.skipped.size()},
                       {"parsed", data.instances.size()},
                       {"skipped", data.skipped.size()},
                       {"aligned", result.examples.size()}};
  write_json_file(a.common.out + "/gpr.json", report);
  write_json_file(a.common.out + "/manifest.json", to_json(manifest));
  std::cout << format_gpr_table(result.neither, result.topic_bias ? &*result.topic_bias : nullptr);
  return kOk;
}

// ---------------------------------------------------------------------------

struct EmploymentArgs {
  Common common;
  std::vector<std::string> attributes;
  std::string format = "lines";
  std::string column;
  std::string sort_column;
  bool ascending = false;
  std::size_t limit = 0;
  std::vector<std::string> templates{"is", "can-do"};
};

int cmd_employment(const EmploymentArgs& a, const std::vector<std::string>& args) {
  auto backend = make_backend(a.common.backend);
  AttributeListOptions lo;
  if (a.format == "csv" || a.format == "tsv") {
    lo.format = AttributeListOptions::Format::delimited;
    lo.delimiter = a.format == "csv" ? ',' : '\t';
    lo.column = a.column;
    lo.sort_column = a.sort_column;
    lo.descending = !a.ascending;
  } else if (a.format != "lines") {
    throw ValidationError("unknown attribute format '" + a.format + "' (lines, csv, tsv)");
  }
  lo.limit = a.limit;

  auto manifest = start_manifest("employment", args, a.common, *backend);
  nlohmann::json report = {{"lists", nlohmann::json::array()}};
  std::vector<EmploymentReport> all;
  for (const auto& path : a.attributes) {
    auto attrs = load_attribute_list(path, lo);
    manifest.add_input(path);
    nlohmann::json list = {{"path", path}, {"n_attributes", attrs.size()},
                           {"reports", nlohmann::json::array()}};
    for (const auto& t : a.templates) {
      auto r = employment_audit(*backend, attrs, parse_employment_template(t), a.common.jobs);
      list["reports"].push_back(to_json(r));
      all.push_back(std::move(r));
    }
    report["lists"].push_back(std::move(list));
  }

  prepare_out(a.common.out);
  write_json_file(a.common.out + "/employment.json", report);
  write_json_file(a.common.out + "/manifest.json", to_json(manifest));
  std::cout << format_employment_table(all);
  return kOk;
}

// ---------------------------------------------------------------------------

int dispatch(const std::vector<std::string>& args);

int cmd_replay(const std::string& manifest_path, const std::string& out) {
  std::ifstream in(manifest_path);
  if (!in) throw ValidationError("cannot open manifest: " + manifest_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(manifest_path, 0, e.what());
  }
  auto m = manifest_from_json(j);
  for (const auto& [path, digest] : m.input_digests) {
    if (sha256_file(path) != digest)
      throw ValidationError("input changed since the recorded run: " + path);
  }
  auto args = m.arguments;
  if (std::find(args.begin(), args.end(), "--seed") == args.end()) {
    args.push_back("--seed");
    args.push_back(std::to_string(m.seed));
  }
  if (!out.empty()) {
    bool replaced = false;
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "--out") {
        args[i + 1] = out;
        replaced = true;
      }
    }
    if (!replaced) {
      args.push_back("--out");
      args.push_back(out);
    }
  }
  return dispatch(args);
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Masked language model bias measurement"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common defaults;
  defaults.seed = default_seed();

  ProbeArgs probe{defaults, {}};
  auto* p = app.add_subcommand("probe", "log probability bias score over category files");
  add_common(p, probe.common);
  p->add_option("--category", probe.categories, "category JSON file (repeatable)")->required();

  WeatArgs weat{defaults, {}};
  auto* w = app.add_subcommand("weat", "WEAT effect size on static or contextual embeddings");
  add_common(w, weat.common);
  w->add_option("--category", weat.categories, "category JSON file (repeatable)")->required();
  w->add_option("--mode", weat.mode, "static or contextual")
      ->check(CLI::IsMember({"static", "contextual"}))
      ->capture_default_str();
  w->add_option("--filter-backend", weat.filter_backend,
                "drop words outside this backend's vocabulary (static mode)");

  GprArgs gpr{defaults};
  auto* g = app.add_subcommand("gpr", "pronoun resolution NEITHER gap and topic bias correlation");
  add_common(g, gpr.common);
  g->add_option("--gap", gpr.gap, "GAP TSV file")->required();
  g->add_option("--config", gpr.config, "classifier config JSON");
  g->add_option("--stopwords", gpr.stopwords, "stopword list")->capture_default_str();
  g->add_option("--topics", gpr.topics, "number of NMF topics")->capture_default_str();
  g->add_option("--top-n", gpr.top_n, "terms per topic scored")->capture_default_str();
  g->add_option("--min-df", gpr.min_df, "minimum document frequency")->capture_default_str();
  g->add_option("--nmf-iterations", gpr.nmf_iterations, "NMF iterations")->capture_default_str();
  g->add_flag("--no-topics", gpr.no_topics, "skip the topic analysis");
  g->add_flag("--raw-weights", gpr.raw_weights, "use unnormalized document-topic weights");
  g->add_flag("--all-genders", gpr.all_genders, "correlate over every sample, not only female ones");

  EmploymentArgs emp{defaults};
  auto* e = app.add_subcommand("employment", "share of attributes closer to he than to she");
  add_common(e, emp.common);
  e->add_option("--attributes", emp.attributes, "attribute list file (repeatable)")->required();
  e->add_option("--format", emp.format, "lines, csv or tsv")->capture_default_str();
  e->add_option("--column", emp.column, "value column for csv/tsv input");
  e->add_option("--sort-column", emp.sort_column, "numeric column to sort by");
  e->add_flag("--ascending", emp.ascending, "sort ascending instead of descending");
  e->add_option("--limit", emp.limit, "keep the first N distinct values (0 = all)");
  e->add_option("--template", emp.templates, "is and/or can-do")->capture_default_str();

  std::string manifest, replay_out;
  auto* r = app.add_subcommand("replay", "re-run a recorded manifest after checking input digests");
  r->add_option("manifest", manifest, "manifest.json from an earlier run")->required();
  r->add_option("--out", replay_out, "output directory (default: the recorded one)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& err) {
    int rc = app.exit(err);
    return rc == 0 ? kOk : kValidation;
  }

  if (p->parsed()) return cmd_probe(probe, args);
  if (w->parsed()) return cmd_weat(weat, args);
  if (g->parsed()) return cmd_gpr(gpr, args);
  if (e->parsed()) return cmd_employment(emp, args);
  return cmd_replay(manifest, replay_out);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return dispatch(args);
  } catch (const TransportError& e) {
    std::cerr << "lpbias: backend error: " << e.what() << "\n";
    return kTransport;
  } catch (const Error& e) {
    std::cerr << "lpbias: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "lpbias: " << e.what() << "\n";
    return kValidation;
  }
}
