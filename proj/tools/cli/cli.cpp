#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "synthcse/adapter/lora.hpp"
#include "synthcse/autodiff/grad_check.hpp"
#include "synthcse/autodiff/op_suite.hpp"
#include "synthcse/common/atomic_file.hpp"
#include "synthcse/common/hash.hpp"
#include "synthcse/common/rng.hpp"
#include "synthcse/common/text.hpp"
#include "synthcse/contrastive/loss.hpp"
#include "synthcse/contrastive/trainer.hpp"
#include "synthcse/encoder/serialization.hpp"
#include "synthcse/eval/aggregate.hpp"
#include "synthcse/eval/harness.hpp"
#include "synthcse/synth/synthesize.hpp"
#include "synthcse/synth/toy_language.hpp"
#include "synthcse/synth/xllora.hpp"

namespace synthcse::cli {

namespace fs = std::filesystem;

namespace {

// Raised for problems found before any output is touched.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_output_dir(const fs::path& path, const char* what) {
  const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) {
    throw UsageError(std::string(what) + ": directory '" + parent.string() + "' does not exist");
  }
}

std::string format_lambda(double lambda) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", lambda);
  return buf;
}

struct GeneratorOptions {
  bool mock = false;
  std::string mock_mode = "paraphrase";
  double mock_failure_rate = 0.0;
  std::string mock_fault = "empty";
  std::string url;
  double timeout = 30.0;
  std::size_t http_retries = 2;

  void add_to(CLI::App& cmd) {
    cmd.add_flag("--mock", mock, "Use the built-in deterministic mock generator");
    cmd.add_option("--mock-mode", mock_mode, "Mock behaviour")
        ->check(CLI::IsMember({"paraphrase", "lazy_negation"}))
        ->capture_default_str();
    cmd.add_option("--mock-failure-rate", mock_failure_rate, "Fraction of anchors the mock always fails")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd.add_option("--mock-fault", mock_fault, "How injected mock failures surface")
        ->check(CLI::IsMember({"empty", "transport"}))
        ->capture_default_str();
    cmd.add_option("--generator-url", url, "Base URL of a /generate endpoint")->envname("SYNTHCSE_GENERATOR_URL");
    cmd.add_option("--timeout", timeout, "HTTP timeout in seconds")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--http-retries", http_retries, "HTTP-level retries per request")->capture_default_str();
  }

  std::unique_ptr<synth::GeneratorClient> make(std::uint64_t seed) const {
    if (mock) {
      synth::MockConfig mc;
      mc.mode = synth::parse_mock_mode(mock_mode);
      mc.failure_rate = mock_failure_rate;
      mc.fault = mock_fault == "transport" ? synth::FaultKind::kTransport : synth::FaultKind::kEmptyText;
      mc.fault_seed = seed;
      return std::make_unique<synth::MockGenerator>(mc);
    }
    if (url.empty()) throw UsageError("no generator: pass --mock or --generator-url (or set SYNTHCSE_GENERATOR_URL)");
    synth::HttpClientConfig hc;
    hc.base_url = url;
    hc.timeout_seconds = timeout;
    hc.max_retries = http_retries;
    return std::make_unique<synth::HttpGeneratorClient>(hc);
  }
};

struct SynthOptions {
  std::string anchors, out, rejects, strategy = "prompting", variant = "separate", lang = "en", prompt_pools;
  std::size_t retries = 2, parallelism = 1, max_tokens = 128;
  double temperature = 0.7, min_accept_ratio = 0.9;
  GeneratorOptions gen;
};

int cmd_synth(const SynthOptions& o, std::uint64_t seed, std::ostream& out) {
  synth::SynthConfig config;
  config.strategy = synth::parse_strategy(o.strategy);
  config.variant = synth::parse_variant(o.variant);
  config.seed = seed;
  config.max_retries = o.retries;
  config.parallelism = o.parallelism;
  config.max_tokens = o.max_tokens;
  config.temperature = o.temperature;
  if (!o.prompt_pools.empty()) config.pools = synth::load_prompt_pools(o.prompt_pools);
  config.validate();
  const fs::path rejects = o.rejects.empty() ? fs::path(o.out + ".rejects.jsonl") : fs::path(o.rejects);
  require_output_dir(o.out, "--out");
  require_output_dir(rejects, "--rejects");
  const auto anchors = synth::load_anchors(o.anchors, o.lang);
  if (anchors.empty()) throw UsageError("anchors file '" + o.anchors + "' has no anchors");
  const auto client = o.gen.make(seed);

  const synth::SynthSummary s = synth::synthesize_dataset(anchors, *client, config, o.out, rejects);
  out << "accepted " << s.accepted << " rejected " << s.rejected << '\n';
  for (const auto& [reason, n] : s.reasons) out << "  " << reason << ": " << n << '\n';
  const double ratio = static_cast<double>(s.accepted) / static_cast<double>(anchors.size());
  if (ratio < o.min_accept_ratio) {
    out << "accept ratio " << ratio << " is below --min-accept-ratio " << o.min_accept_ratio << '\n';
    return kExitBelowTarget;
  }
  return kExitOk;
}

struct SftOptions {
  std::string triples, pairs, out;
  std::size_t target_size = 10000, retries = 2;
  bool allow_mt = false;
  GeneratorOptions gen;
};

int cmd_sft(const SftOptions& o, std::uint64_t seed, std::ostream& out) {
  require_output_dir(o.out, "--out");
  const auto triples = synth::load_xnli_triples(o.triples);
  const auto pairs = synth::load_parallel_pairs(o.pairs);
  synth::SftConfig config;
  config.target_size = o.target_size;
  config.seed = seed;
  config.allow_machine_translation = o.allow_mt;
  config.max_retries = o.retries;
  const auto client = o.gen.make(seed);
  synth::SftResult r;
  try {
    r = synth::build_xllora_sft(triples, pairs, *client, config);
  } catch (const synth::QualityError& e) {
    throw UsageError(e.what());
  }
  synth::write_sft(o.out, r.examples);
  out << "examples " << r.examples.size() << " of " << o.target_size << ", generator calls " << r.generator_calls
      << ", warnings " << r.warnings << '\n';
  for (const std::string& w : r.warning_messages) out << "  warning: " << w << '\n';
  return kExitOk;
}

struct ComposeOptions {
  std::string ta_src, la_src, la_tgt, out, language;
  std::optional<double> lambda;
  std::vector<double> lambdas;
  bool grid = false;
};

fs::path grid_path(const fs::path& out, double lambda) {
  fs::path p = out;
  p.replace_filename(out.stem().string() + ".lambda-" + format_lambda(lambda) + out.extension().string());
  return p;
}

int cmd_compose(const ComposeOptions& o, std::ostream& out) {
  std::vector<double> lambdas = o.lambdas;
  if (o.grid) lambdas = adapter::default_lambda_grid();
  if (o.lambda) {
    if (!lambdas.empty()) throw UsageError("give either --lambda or a grid, not both");
    lambdas = {*o.lambda};
  }
  if (lambdas.empty()) lambdas = {1.0};
  for (double l : lambdas) {
    if (!std::isfinite(l)) throw UsageError("lambda values must be finite");
  }
  require_output_dir(o.out, "--out");
  const bool single = lambdas.size() == 1 && !o.grid && o.lambdas.empty();

  const auto ta_src = adapter::load_adapter(o.ta_src);
  const auto la_src = adapter::load_adapter(o.la_src);
  const auto la_tgt = adapter::load_adapter(o.la_tgt);
  std::vector<std::pair<fs::path, adapter::LoraAdapter>> results;
  for (double lambda : lambdas) {
    adapter::LoraAdapter composed = adapter::compose_adamergex(ta_src, la_tgt, la_src, lambda);
    composed.metadata["composition.ta_src"] = fs::path(o.ta_src).filename().string();
    composed.metadata["composition.la_src"] = fs::path(o.la_src).filename().string();
    composed.metadata["composition.la_tgt"] = fs::path(o.la_tgt).filename().string();
    if (!o.language.empty()) composed.metadata["language"] = o.language;
    results.emplace_back(single ? fs::path(o.out) : grid_path(o.out, lambda), std::move(composed));
  }
  for (const auto& [path, composed] : results) {
    adapter::save_adapter(composed, path);
    out << "wrote " << path.string() << '\n';
  }
  return kExitOk;
}

struct TrainOptions {
  std::string data, out, history, init, mode = "supervised", pooling = "afl";
  std::size_t epochs = 30, batch_size = 32;
  double lr = 0.1, temperature = 0.05;
  std::size_t hidden = 32, layers = 2, heads = 2, ffn = 64, max_seq_len = 32;
  double dropout_keep = 0.9, min_vocab_coverage = 0.5;
};

int cmd_train(const TrainOptions& o, std::uint64_t seed, std::ostream& out) {
  const fs::path history = o.history.empty() ? fs::path(o.out + ".history.csv") : fs::path(o.history);
  require_output_dir(o.out, "--out");
  require_output_dir(history, "--history");

  contrastive::TrainConfig tc;
  tc.batch_size = o.batch_size;
  tc.learning_rate = o.lr;
  tc.temperature = o.temperature;
  tc.epochs = o.epochs;
  tc.seed = seed;
  tc.mode = contrastive::parse_mode(o.mode);
  tc.pooling = encoder::parse_pooling(o.pooling);
  tc.validate();

  const auto triplets = synth::load_triplets(o.data);
  if (triplets.size() < 2) throw UsageError("training data needs at least 2 triplets");
  std::vector<contrastive::TextTriplet> data;
  std::vector<std::string> texts;
  for (const synth::Triplet& t : triplets) {
    if (tc.mode == contrastive::TrainMode::kSupervised && (t.positive.empty() || t.negative.empty())) {
      throw UsageError("supervised training needs a positive and a negative for every anchor ('" + t.anchor + "')");
    }
    data.push_back({t.anchor, t.positive, t.negative});
    texts.push_back(t.anchor);
    if (tc.mode == contrastive::TrainMode::kSupervised) {
      texts.push_back(t.positive);
      texts.push_back(t.negative);
    }
  }

  encoder::EncoderCheckpoint start;
  if (!o.init.empty()) {
    start = encoder::load_checkpoint(o.init);
    std::size_t known = 0, total = 0;
    for (const std::string& text : texts) {
      for (const std::string& w : word_tokens(text)) {
        ++total;
        known += start.vocab.contains(w) ? 1 : 0;
      }
    }
    const double coverage = total == 0 ? 0.0 : static_cast<double>(known) / static_cast<double>(total);
    if (coverage < o.min_vocab_coverage) {
      throw UsageError("dataset does not match the initial parameters: only " + std::to_string(coverage) +
                       " of its tokens are in the checkpoint vocabulary");
    }
  } else {
    start.vocab = encoder::Vocab::build(texts);
    encoder::EncoderConfig ec;
    ec.vocab_size = start.vocab.size();
    ec.hidden_dim = o.hidden;
    ec.num_layers = o.layers;
    ec.num_heads = o.heads;
    ec.ffn_dim = o.ffn;
    ec.max_seq_len = o.max_seq_len;
    ec.dropout_keep = o.dropout_keep;
    ec.pooling = tc.pooling;
    ec.validate();
    start.params = encoder::init_params(ec, seed);
    start.metadata = {{"init_seed", seed}};
  }

  if (tc.epochs == 0) {
    encoder::save_checkpoint(start, o.out);
    AtomicFile h(history);
    contrastive::write_history_csv(h.stream(), {});
    h.commit();
    out << "epochs 0: wrote initial parameters to " << o.out << '\n';
    return kExitOk;
  }

  const contrastive::TrainResult result = contrastive::train(data, start.vocab, tc, start.params);
  encoder::EncoderCheckpoint trained{result.params, start.vocab, start.metadata};
  trained.metadata["mode"] = contrastive::mode_name(tc.mode);
  trained.metadata["pooling"] = encoder::pooling_name(tc.pooling);
  trained.metadata["seed"] = seed;
  trained.metadata["epochs"] = tc.epochs;
  trained.metadata["batch_size"] = tc.batch_size;
  trained.metadata["learning_rate"] = tc.learning_rate;
  trained.metadata["temperature"] = tc.temperature;
  trained.metadata["data_fingerprint"] = to_hex(fnv1a64(read_file(o.data)));
  encoder::save_checkpoint(trained, o.out);
  AtomicFile h(history);
  contrastive::write_history_csv(h.stream(), result.history);
  h.commit();
  out << "trained " << tc.epochs << " epochs, loss " << result.history.front() << " -> " << result.history.back()
      << '\n';
  return kExitOk;
}

struct EvalOptions {
  std::string params, sts, queries, corpus, qrels, report, aggregate, method, dataset, pooling;
  std::size_t k = 10;
};

int cmd_eval(const EvalOptions& o, std::optional<std::uint64_t> seed_flag, std::ostream& out) {
  const bool retrieval = !o.queries.empty() || !o.corpus.empty() || !o.qrels.empty();
  if (retrieval && (o.queries.empty() || o.corpus.empty() || o.qrels.empty())) {
    throw UsageError("retrieval evaluation needs --queries, --corpus and --qrels together");
  }
  if (o.sts.empty() && !retrieval) throw UsageError("nothing to evaluate: pass --sts and/or the retrieval files");
  require_output_dir(o.report, "--report");
  if (!o.aggregate.empty()) require_output_dir(o.aggregate, "--aggregate");

  const encoder::EncoderCheckpoint ck = encoder::load_checkpoint(o.params);
  const encoder::Pooling pooling = encoder::parse_pooling(
      !o.pooling.empty() ? o.pooling : ck.metadata.value("pooling", std::string(encoder::pooling_name(ck.params.config.pooling))));
  const std::uint64_t seed = seed_flag ? *seed_flag : ck.metadata.value("seed", std::uint64_t{0});
  const std::string method = o.method.empty() ? fs::path(o.params).stem().string() : o.method;

  struct Named {
    std::string dataset;
    eval::EvalReport report;
  };
  std::vector<Named> reports;
  const bool both = !o.sts.empty() && retrieval;
  if (!o.sts.empty()) {
    const auto pairs = eval::load_sts(o.sts);
    std::string name = o.dataset.empty() ? fs::path(o.sts).stem().string() : o.dataset;
    if (both && !o.dataset.empty()) name += "-sts";
    reports.push_back({name, eval::sts_eval(ck.params, ck.vocab, pairs, pooling)});
  }
  if (retrieval) {
    const auto task = eval::load_retrieval(o.queries, o.corpus, o.qrels);
    std::string name = o.dataset.empty() ? fs::path(o.corpus).stem().string() : o.dataset;
    if (both && !o.dataset.empty()) name += "-retrieval";
    reports.push_back({name, eval::retrieval_eval(ck.params, ck.vocab, task, o.k, pooling)});
  }

  nlohmann::json doc;
  doc["method"] = method;
  doc["seed"] = seed;
  doc["params_fingerprint"] = to_hex(fnv1a64(read_file(o.params)));
  doc["reports"] = nlohmann::json::array();
  for (const Named& n : reports) {
    nlohmann::json j = n.report.to_json();
    j["dataset"] = n.dataset;
    doc["reports"].push_back(std::move(j));
  }
  write_file_atomic(o.report, doc.dump(2) + "\n");
  for (const Named& n : reports) {
    const eval::AggregateRow row = eval::make_row(method, n.dataset, seed, n.report);
    if (!o.aggregate.empty()) eval::append_aggregate(o.aggregate, row);
    out << eval::to_csv_row(row) << '\n';
  }
  return kExitOk;
}

struct ReportOptions {
  std::string aggregate, out;
};

int cmd_report(const ReportOptions& o, std::ostream& out) {
  if (!o.out.empty()) require_output_dir(o.out, "--out");
  const std::string table = eval::summary_csv(eval::summarize(eval::load_aggregate(o.aggregate)));
  if (o.out.empty()) {
    out << table;
  } else {
    write_file_atomic(o.out, table);
    out << "wrote " << o.out << '\n';
  }
  return kExitOk;
}

struct GradcheckOptions {
  std::size_t trials = 100;
  double eps = 1e-5, tolerance = 1e-4;
};

int cmd_gradcheck(const GradcheckOptions& o, std::uint64_t seed, std::ostream& out) {
  auto results = autodiff::run_op_suite(o.trials, seed, o.eps);

  // Full supervised loss on M=3 anchors/positives/negatives of dimension 4.
  for (const double tau : {1.0, 0.2}) {
    char name[32];
    std::snprintf(name, sizeof name, "supervised_loss@%g", tau);
    results.push_back({name, o.trials, contrastive::supervised_loss_grad_error(o.trials, mix_seed(seed, 0x1055), tau, 3, 4, o.eps)});
  }

  bool ok = true;
  for (const autodiff::OpCheck& c : results) {
    const bool pass = c.worst_error < o.tolerance;
    ok = ok && pass;
    char line[128];
    std::snprintf(line, sizeof line, "%-4s %-20s worst relative error %.3e over %zu trials\n", pass ? "ok" : "FAIL",
                  c.op.c_str(), c.worst_error, c.trials);
    out << line;
  }
  return ok ? kExitOk : kExitBelowTarget;
}

struct ToyOptions {
  std::string out_dir;
  std::size_t anchors = 500, sts_pairs = 100, docs = 40;
};

// Writes a self-contained toy corpus: anchors, scored STS pairs, and a small
// retrieval task whose relevant documents share the query's meaning.
int cmd_toy(const ToyOptions& o, std::uint64_t seed, std::ostream& out) {
  if (!fs::is_directory(o.out_dir)) throw UsageError("--out-dir '" + o.out_dir + "' is not a directory");
  const fs::path dir(o.out_dir);
  {
    AtomicFile f(dir / "anchors.jsonl");
    for (const std::string& s : synth::toy::sentences(o.anchors, mix_seed(seed, 1))) {
      f.stream() << nlohmann::json{{"text", s}, {"lang", "en"}}.dump() << '\n';
    }
    f.commit();
  }
  std::vector<eval::StsPair> pairs;
  for (const auto& p : synth::toy::sts_pairs(o.sts_pairs, mix_seed(seed, 2))) pairs.push_back({p.a, p.b, p.score, 0.0, 5.0});
  eval::write_sts(dir / "sts.jsonl", pairs);

  Rng rng(mix_seed(seed, 3));
  std::ostringstream queries, corpus, qrels;
  std::vector<synth::toy::Meaning> meanings;
  for (std::size_t d = 0; d < o.docs; ++d) {
    meanings.push_back(synth::toy::random_meaning(rng));
    char id[32];
    std::snprintf(id, sizeof id, "d%03zu", d);
    corpus << id << '\t' << synth::toy::realize(meanings.back(), rng) << '\n';
  }
  const std::size_t n_queries = std::max<std::size_t>(1, o.docs / 4);
  for (std::size_t q = 0; q < n_queries; ++q) {
    const std::size_t target = rng.index(meanings.size());
    char qid[32];
    std::snprintf(qid, sizeof qid, "q%03zu", q);
    queries << qid << '\t' << synth::toy::realize(meanings[target], rng) << '\n';
    for (std::size_t d = 0; d < meanings.size(); ++d) {
      if (synth::toy::similarity(meanings[d], meanings[target]) >= 4.0) {
        char id[32];
        std::snprintf(id, sizeof id, "d%03zu", d);
        qrels << qid << '\t' << id << '\n';
      }
    }
  }
  write_file_atomic(dir / "queries.tsv", queries.str());
  write_file_atomic(dir / "corpus.tsv", corpus.str());
  write_file_atomic(dir / "qrels.tsv", qrels.str());
  out << "wrote toy corpus to " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic triplet generation and contrastive sentence-embedding training", "synthcse"};
  app.set_config("--config", "", "TOML config; [command] sections set that command's options, flags win");
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = app.add_option("--seed", seed, "Global seed")->capture_default_str();

  SynthOptions synth_o;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a triplet dataset from anchors");
  synth_cmd->add_option("--anchors", synth_o.anchors, "Anchors: JSONL {text, lang} or one sentence per line")
      ->required()
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", synth_o.out, "Triplet dataset (JSONL)")->required();
  synth_cmd->add_option("--rejects", synth_o.rejects, "Rejected anchors (default: <out>.rejects.jsonl)");
  synth_cmd->add_option("--strategy", synth_o.strategy)
      ->check(CLI::IsMember({"prompting", "adapter_composition", "xl_lora"}))
      ->capture_default_str();
  synth_cmd->add_option("--variant", synth_o.variant, "Prompting: one request per kind, or both at once")
      ->check(CLI::IsMember({"separate", "combined"}))
      ->capture_default_str();
  synth_cmd->add_option("--lang", synth_o.lang, "Language of plain-text anchors")->capture_default_str();
  synth_cmd->add_option("--prompt-pools", synth_o.prompt_pools, "JSON file replacing the built-in prompt pools")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--retries", synth_o.retries, "Retries per anchor")->capture_default_str();
  synth_cmd->add_option("--parallelism", synth_o.parallelism, "Concurrent requests")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd->add_option("--max-tokens", synth_o.max_tokens)->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--temperature", synth_o.temperature)->capture_default_str();
  synth_cmd->add_option("--min-accept-ratio", synth_o.min_accept_ratio, "Exit 3 when fewer anchors are accepted")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  synth_o.gen.add_to(*synth_cmd);

  SftOptions sft_o;
  CLI::App* sft_cmd = app.add_subcommand("sft", "Build the cross-lingual instruction-tuning set");
  sft_cmd->add_option("--triples", sft_o.triples, "JSONL {anchor, anchor_lang, positive, negative, quality}")
      ->required()
      ->check(CLI::ExistingFile);
  sft_cmd->add_option("--pairs", sft_o.pairs, "JSONL {english, foreign, foreign_lang, quality}")
      ->required()
      ->check(CLI::ExistingFile);
  sft_cmd->add_option("--out", sft_o.out, "SFT examples (JSONL)")->required();
  sft_cmd->add_option("--target-size", sft_o.target_size)->capture_default_str();
  sft_cmd->add_option("--retries", sft_o.retries)->capture_default_str();
  sft_cmd->add_flag("--allow-mt", sft_o.allow_mt, "Accept machine-translated inputs (tagged quality=machine)");
  sft_o.gen.add_to(*sft_cmd);

  ComposeOptions compose_o;
  CLI::App* compose_cmd = app.add_subcommand("compose", "Compose LoRA adapters: ta_src + lambda (la_tgt - la_src)");
  compose_cmd->add_option("--ta-src", compose_o.ta_src)->required()->check(CLI::ExistingFile);
  compose_cmd->add_option("--la-src", compose_o.la_src)->required()->check(CLI::ExistingFile);
  compose_cmd->add_option("--la-tgt", compose_o.la_tgt)->required()->check(CLI::ExistingFile);
  compose_cmd->add_option("--out", compose_o.out, "Output; grids insert .lambda-<value> before the extension")
      ->required();
  compose_cmd->add_option("--lambda", compose_o.lambda, "Single scaling factor (default 1)");
  compose_cmd->add_option("--lambdas", compose_o.lambdas, "Explicit lambda grid")->delimiter(',');
  compose_cmd->add_flag("--grid", compose_o.grid, "Use the default lambda grid");
  compose_cmd->add_option("--language", compose_o.language, "Target language recorded in metadata");

  TrainOptions train_o;
  CLI::App* train_cmd = app.add_subcommand("train", "Contrastive training of the toy encoder");
  train_cmd->add_option("--data", train_o.data, "Triplet dataset (JSONL)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train_o.out, "Parameter file")->required();
  train_cmd->add_option("--history", train_o.history, "Loss history CSV (default: <out>.history.csv)");
  train_cmd->add_option("--init", train_o.init, "Start from this parameter file")->check(CLI::ExistingFile);
  train_cmd->add_option("--mode", train_o.mode)
      ->check(CLI::IsMember({"supervised", "unsupervised"}))
      ->capture_default_str();
  train_cmd->add_option("--pooling", train_o.pooling)->check(CLI::IsMember({"avg", "afl", "cls_mlp"}))->capture_default_str();
  train_cmd->add_option("--epochs", train_o.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", train_o.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", train_o.lr, "SGD step size")->capture_default_str();
  train_cmd->add_option("--temperature", train_o.temperature)->capture_default_str();
  train_cmd->add_option("--hidden", train_o.hidden)->capture_default_str();
  train_cmd->add_option("--layers", train_o.layers)->capture_default_str();
  train_cmd->add_option("--heads", train_o.heads)->capture_default_str();
  train_cmd->add_option("--ffn", train_o.ffn)->capture_default_str();
  train_cmd->add_option("--max-seq-len", train_o.max_seq_len)->capture_default_str();
  train_cmd->add_option("--dropout-keep", train_o.dropout_keep)->capture_default_str();
  train_cmd->add_option("--min-vocab-coverage", train_o.min_vocab_coverage,
                        "With --init, minimum fraction of dataset tokens known to the checkpoint")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  EvalOptions eval_o;
  CLI::App* eval_cmd = app.add_subcommand("eval", "STS and retrieval evaluation");
  eval_cmd->add_option("--params", eval_o.params)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--sts", eval_o.sts, "STS pairs (JSONL)")->check(CLI::ExistingFile);
  eval_cmd->add_option("--queries", eval_o.queries, "id<TAB>text")->check(CLI::ExistingFile);
  eval_cmd->add_option("--corpus", eval_o.corpus, "id<TAB>text")->check(CLI::ExistingFile);
  eval_cmd->add_option("--qrels", eval_o.qrels, "query_id<TAB>doc_id")->check(CLI::ExistingFile);
  eval_cmd->add_option("--k", eval_o.k)->check(CLI::PositiveNumber)->capture_default_str();
  eval_cmd->add_option("--pooling", eval_o.pooling, "Override the pooling stored with the parameters")
      ->check(CLI::IsMember({"avg", "afl", "cls_mlp"}));
  eval_cmd->add_option("--report", eval_o.report, "Report (JSON)")->required();
  eval_cmd->add_option("--aggregate", eval_o.aggregate, "Append summary rows to this table");
  eval_cmd->add_option("--method", eval_o.method, "Method name for the aggregate key");
  eval_cmd->add_option("--dataset", eval_o.dataset, "Dataset name for the aggregate key");

  ReportOptions report_o;
  CLI::App* report_cmd = app.add_subcommand("report", "Mean and standard deviation over seeds");
  report_cmd->add_option("--aggregate", report_o.aggregate)->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--out", report_o.out, "Write the summary CSV here instead of stdout");

  GradcheckOptions grad_o;
  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every autodiff op and the loss");
  grad_cmd->add_option("--trials", grad_o.trials)->check(CLI::PositiveNumber)->capture_default_str();
  grad_cmd->add_option("--eps", grad_o.eps)->capture_default_str();
  grad_cmd->add_option("--tolerance", grad_o.tolerance)->capture_default_str();

  ToyOptions toy_o;
  CLI::App* toy_cmd = app.add_subcommand("toy", "Write the synthetic toy corpus used in examples and tests");
  toy_cmd->add_option("--out-dir", toy_o.out_dir)->required();
  toy_cmd->add_option("--anchors", toy_o.anchors)->capture_default_str();
  toy_cmd->add_option("--sts-pairs", toy_o.sts_pairs)->capture_default_str();
  toy_cmd->add_option("--docs", toy_o.docs)->check(CLI::PositiveNumber)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth_o, seed, out);
    if (sft_cmd->parsed()) return cmd_sft(sft_o, seed, out);
    if (compose_cmd->parsed()) return cmd_compose(compose_o, out);
    if (train_cmd->parsed()) return cmd_train(train_o, seed, out);
    if (eval_cmd->parsed()) {
      return cmd_eval(eval_o, seed_opt->count() > 0 ? std::optional(seed) : std::nullopt, out);
    }
    if (report_cmd->parsed()) return cmd_report(report_o, out);
    if (grad_cmd->parsed()) return cmd_gradcheck(grad_o, seed, out);
    if (toy_cmd->parsed()) return cmd_toy(toy_o, seed, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace synthcse::cli
