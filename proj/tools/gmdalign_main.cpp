/**
 * gmdalign
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gmdalign/gmdalign.hpp"

namespace {

using namespace gmdalign;
using nlohmann::json;

// GMDALIGN_LOG={quiet,info,debug}; log lines go to stderr so stdout stays
// byte-stable for scripted use.
int log_level() {
  static const int level = [] {
    const char* env = std::getenv("GMDALIGN_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "gmdalign: " << msg << "\n";
}

std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string file_checksum(const std::string& path) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(detail::read_file_bytes(path))));
  return buf;
}

WeightScheme parse_weighting(const std::string& s) {
  if (s == "uniform") return WeightScheme::Uniform;
  if (s == "sl") return WeightScheme::SentenceLength;
  if (s == "idf") return WeightScheme::Idf;
  if (s == "slidf") return WeightScheme::Slidf;
  throw UsageError("unknown weighting '" + s +
                   "' (valid: uniform, sl, idf, slidf)");
}

MetricKind parse_metric_spec(const std::string& s) {
  if (s == "euclidean") return EuclideanMetric{};
  if (s == "cosine") return CosineMetric{};
  if (s.rfind("learned:", 0) == 0)
    return load_metric(s.substr(8), &std::cerr);
  throw UsageError("unknown metric '" + s +
                   "' (valid: euclidean, cosine, learned:<path>)");
}

MatchStrategy parse_matching(const std::string& s) {
  if (s == "one-to-one") return MatchStrategy::OneToOne;
  if (s == "argmin") return MatchStrategy::ArgminPerSource;
  throw UsageError("unknown matching '" + s + "' (valid: one-to-one, argmin)");
}

std::vector<DocPair> read_matched_tsv(const std::string& path) {
  std::vector<DocPair> out;
  detail::for_each_tsv_line(path, [&](std::size_t lineno,
                                      const std::vector<std::string>& f) {
    if (f.size() != 2)
      throw ParseError(path, lineno, "expected 2 tab-separated fields");
    out.push_back({f[0], f[1]});
  });
  return out;
}

void write_run_manifest(const std::string& path, const std::string& subcommand,
                        const json& config,
                        const std::vector<std::string>& input_paths,
                        const std::vector<std::string>& outputs) {
  json manifest;
  manifest["subcommand"] = subcommand;
  manifest["config"] = config;
  json inputs = json::object();
  for (const auto& p : input_paths) inputs[p] = file_checksum(p);
  manifest["inputs"] = inputs;
  manifest["outputs"] = outputs;
  detail::write_file_bytes(path, manifest.dump(2) + "\n");
}

// ---- train -------------------------------------------------------------------

struct TrainArgs {
  std::string algo;
  std::string src_emb, tgt_emb, pairs, out;
  std::int64_t pair_limit = -1;  // -1: all pairs
  std::int64_t shuffle_seed = -1;
  double neg_ratio = 1.0;
  std::int64_t seed = 0;
  double gamma = 1.0;
  int max_iter = -1;     // resolved per algorithm
  double tol = -1.0;     // resolved per algorithm
  double u_percentile = 5.0, l_percentile = 95.0;
  double sparsity = 0.01, balance = 1e-3;
  std::string prior = "identity";
};

int run_train(const TrainArgs& args) {
  if (args.pair_limit == 0) throw UsageError("--pair-limit must be at least 1");
  const auto src = read_embedding_matrix(args.src_emb);
  const auto tgt = read_embedding_matrix(args.tgt_emb);
  auto pairs = read_pairs(args.pairs);
  const std::size_t available = pairs.pairs.size();

  if (args.shuffle_seed >= 0) {
    DetRng rng(static_cast<std::uint64_t>(args.shuffle_seed));
    for (std::size_t i = pairs.pairs.size() - 1; i > 0; --i)
      std::swap(pairs.pairs[i], pairs.pairs[rng.below(i + 1)]);
  }
  if (args.pair_limit > 0) {
    if (static_cast<std::size_t>(args.pair_limit) > available)
      throw ValidationError("--pair-limit " + std::to_string(args.pair_limit) +
                            " exceeds available pairs (" +
                            std::to_string(available) + ")");
    pairs.pairs.resize(static_cast<std::size_t>(args.pair_limit));
  }

  const MetricPrior prior = args.prior == "covariance" ? MetricPrior::Covariance
                                                       : MetricPrior::Identity;
  NegativeSamplingConfig neg{args.neg_ratio,
                             static_cast<std::uint64_t>(args.seed)};
  const auto constraints = build_constraints(pairs, src, tgt, neg);
  log_info("training " + args.algo + " on " + std::to_string(pairs.pairs.size()) +
           " pairs (" + std::to_string(constraints.size()) + " constraints)");

  TrainResult result = [&] {
    if (args.algo == "itml") {
      ItmlConfig cfg;
      cfg.gamma = args.gamma;
      if (args.max_iter >= 0) cfg.max_iter = args.max_iter;
      if (args.tol >= 0) cfg.tol = args.tol;
      cfg.u_percentile = args.u_percentile;
      cfg.l_percentile = args.l_percentile;
      cfg.prior = prior;
      cfg.seed = args.seed;
      return train_itml(constraints, cfg);
    }
    SdmlConfig cfg;
    cfg.sparsity_param = args.sparsity;
    cfg.balance_param = args.balance;
    if (args.max_iter >= 0) cfg.max_iter = args.max_iter;
    if (args.tol >= 0) cfg.tol = args.tol;
    cfg.prior = prior;
    cfg.seed = args.seed;
    return train_sdml(constraints, cfg);
  }();

  save_metric(result.metric, args.out);

  json config;
  config["algo"] = args.algo;
  config["pair_limit"] = args.pair_limit;
  config["shuffle_seed"] = args.shuffle_seed;
  config["neg_ratio"] = args.neg_ratio;
  config["seed"] = args.seed;
  config["prior"] = args.prior;
  if (args.algo == "itml") {
    config["gamma"] = args.gamma;
    config["u_percentile"] = args.u_percentile;
    config["l_percentile"] = args.l_percentile;
  } else {
    config["sparsity"] = args.sparsity;
    config["balance"] = args.balance;
  }
  write_run_manifest(args.out + ".run.json", "train", config,
                     {args.src_emb, args.tgt_emb, args.pairs}, {args.out});

  json log;
  log["algorithm"] = args.algo;
  log["dim"] = src.dim();
  log["pairs_available"] = available;
  log["pairs_used"] = pairs.pairs.size();
  std::size_t sim = 0;
  for (const auto& c : constraints) sim += c.similar;
  log["constraints_similar"] = sim;
  log["constraints_dissimilar"] = constraints.size() - sim;
  log["iterations"] = result.stats.sweeps;
  log["converged"] = result.stats.converged;
  log["bound_u"] = result.stats.bound_u;
  log["bound_l"] = result.stats.bound_l;
  log["satisfied_before"] = result.stats.satisfied_before;
  log["satisfied_after"] = result.stats.satisfied_after;
  log["out"] = args.out;
  std::cout << log.dump(2) << "\n";
  return 0;
}

// ---- align -------------------------------------------------------------------

struct AlignArgs {
  std::string src_emb, src_manifest, tgt_emb, tgt_manifest;
  std::string weighting = "sl";
  std::string metric = "euclidean";
  std::string matching = "one-to-one";
  bool date_filter = false;
  std::string out_dir;
  int jobs = 1;
};

int run_align(const AlignArgs& args) {
  const WeightScheme scheme = parse_weighting(args.weighting);
  const MetricKind metric = parse_metric_spec(args.metric);
  const MatchStrategy strategy = parse_matching(args.matching);
  if (args.jobs < 1) throw UsageError("--jobs must be at least 1");

  const auto src_emb = read_embedding_matrix(args.src_emb);
  const auto tgt_emb = read_embedding_matrix(args.tgt_emb);
  const auto src_docs = read_manifest(args.src_manifest, src_emb);
  const auto tgt_docs = read_manifest(args.tgt_manifest, tgt_emb);
  log_info("aligning " + std::to_string(src_docs.size()) + " x " +
           std::to_string(tgt_docs.size()) + " documents");

  const auto candidates = candidate_pairs(src_docs, tgt_docs, args.date_filter);
  ScoreConfig config;
  config.scheme = scheme;
  config.metric = metric;
  config.jobs = args.jobs;
  const auto scored =
      score_all(candidates, src_docs, src_emb, tgt_docs, tgt_emb, config);
  const auto matched = match(scored, strategy);

  std::filesystem::create_directories(args.out_dir);
  const auto out_path = [&](const char* name) {
    return (std::filesystem::path(args.out_dir) / name).string();
  };
  std::string scored_tsv = "# src_id\ttgt_id\tdistance\n";
  for (const auto& s : scored)
    scored_tsv += s.src + "\t" + s.tgt + "\t" + format_g9(s.distance) + "\n";
  detail::write_file_bytes(out_path("scored.tsv"), scored_tsv);
  std::string matched_tsv;
  for (const auto& m : matched) matched_tsv += m.src + "\t" + m.tgt + "\n";
  detail::write_file_bytes(out_path("matched.tsv"), matched_tsv);

  json echo;
  echo["weighting"] = args.weighting;
  echo["metric"] = args.metric;
  echo["matching"] = args.matching;
  echo["date_filter"] = args.date_filter;
  echo["jobs"] = args.jobs;
  echo["candidates"] = candidates.size();
  echo["matched"] = matched.size();
  write_run_manifest(out_path("run_manifest.json"), "align", echo,
                     {args.src_emb, args.src_manifest, args.tgt_emb,
                      args.tgt_manifest},
                     {"scored.tsv", "matched.tsv"});
  log_info("wrote " + std::to_string(scored.size()) + " scores, " +
           std::to_string(matched.size()) + " matches to " + args.out_dir);
  return 0;
}

// ---- eval --------------------------------------------------------------------

int run_eval(const std::string& matched_path, const std::string& gold_path) {
  const auto matched = read_matched_tsv(matched_path);
  const auto gold = read_gold(gold_path);
  const auto report = evaluate(matched, gold);
  json out;
  out["gold_size"] = report.gold_size;
  out["found"] = report.found;
  // Display rounding only; the stored value stays full precision upstream.
  out["recall"] = std::round(report.recall * 1e4) / 1e4;
  json missed = json::array();
  for (const auto& m : report.missed) missed.push_back({m.src, m.tgt});
  out["missed"] = missed;
  std::cout << out.dump(2) << "\n";
  return 0;
}

// ---- gmd ---------------------------------------------------------------------

struct GmdArgs {
  std::string src_emb, src_manifest, tgt_emb, tgt_manifest;
  std::string src_doc, tgt_doc;
  std::string weighting = "sl";
  std::string metric = "euclidean";
};

int run_gmd(const GmdArgs& args) {
  const WeightScheme scheme = parse_weighting(args.weighting);
  const MetricKind metric = parse_metric_spec(args.metric);
  const auto src_emb = read_embedding_matrix(args.src_emb);
  const auto tgt_emb = read_embedding_matrix(args.tgt_emb);
  const auto src_docs = read_manifest(args.src_manifest, src_emb);
  const auto tgt_docs = read_manifest(args.tgt_manifest, tgt_emb);

  const auto find_doc = [](const std::vector<Document>& docs,
                           const std::string& id) -> const Document& {
    for (const auto& d : docs)
      if (d.doc_id == id) return d;
    throw ValidationError("document '" + id + "' not found in manifest");
  };
  const Document& src_doc = find_doc(src_docs, args.src_doc);
  const Document& tgt_doc = find_doc(tgt_docs, args.tgt_doc);

  const bool needs_idf =
      scheme == WeightScheme::Idf || scheme == WeightScheme::Slidf;
  IdfTable src_idf, tgt_idf;
  if (needs_idf) {
    src_idf = build_idf_table(src_docs);
    tgt_idf = build_idf_table(tgt_docs);
  }
  const auto wa = apply_weighting(src_doc, scheme, needs_idf ? &src_idf : nullptr);
  const auto wb = apply_weighting(tgt_doc, scheme, needs_idf ? &tgt_idf : nullptr);
  const auto result = greedy_movers_distance(wa, src_emb, wb, tgt_emb, metric);

  std::cout << "# gmd src=" << args.src_doc << " tgt=" << args.tgt_doc
            << " metric=" << args.metric << " weighting=" << args.weighting
            << " total=" << format_g9(result.distance) << "\n";
  std::cout << "# src_idx\ttgt_idx\tmass\tunit_dist\n";
  for (const auto& m : result.trace.moves)
    std::cout << m.src << "\t" << m.tgt << "\t" << format_g9(m.mass) << "\t"
              << format_g9(m.unit_dist) << "\n";
  return 0;
}

// ---- synth -------------------------------------------------------------------

struct SynthArgs {
  int docs = 100;
  double sentences_per_doc = 10.0;
  int dim = 16;
  double noise = 0.0;
  std::string transform = "rotation";
  std::int64_t seed = 1;
  std::string out_dir;
  int train_pairs = 0;
  int date_days = 10;
};

int run_synth(const SynthArgs& args) {
  SynthConfig cfg;
  cfg.docs = args.docs;
  cfg.sentences_per_doc = args.sentences_per_doc;
  cfg.dim = args.dim;
  cfg.noise_sigma = args.noise;
  if (args.transform == "rotation")
    cfg.transform = SynthTransform::Rotation;
  else if (args.transform == "affine")
    cfg.transform = SynthTransform::Affine;
  else
    throw UsageError("unknown transform '" + args.transform +
                     "' (valid: rotation, affine)");
  cfg.seed = static_cast<std::uint64_t>(args.seed);
  cfg.train_pairs = args.train_pairs;
  cfg.date_span_days = args.date_days;

  const auto corpus = make_synth_corpus(cfg);
  write_synth_corpus(corpus, args.out_dir);

  json config;
  config["docs"] = args.docs;
  config["sentences_per_doc"] = args.sentences_per_doc;
  config["dim"] = args.dim;
  config["noise"] = args.noise;
  config["transform"] = args.transform;
  config["seed"] = args.seed;
  config["train_pairs"] = args.train_pairs;
  config["date_days"] = args.date_days;
  const auto manifest_path =
      (std::filesystem::path(args.out_dir) / "run_manifest.json").string();
  write_run_manifest(manifest_path, "synth", config, {},
                     {"src.emb", "tgt.emb", "src_manifest.jsonl",
                      "tgt_manifest.jsonl", "gold.tsv", "pairs.tsv"});
  log_info("wrote synthetic corpus to " + args.out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual document alignment with Greedy Movers Distance "
               "over sentence embeddings"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand(
      "train", "Learn a Mahalanobis metric from a parallel corpus");
  train->add_option("--algo", train_args.algo, "Learner")
      ->required()
      ->check(CLI::IsMember({"itml", "sdml"}));
  train->add_option("--src-emb", train_args.src_emb)->required();
  train->add_option("--tgt-emb", train_args.tgt_emb)->required();
  train->add_option("--pairs", train_args.pairs)->required();
  train->add_option("--out", train_args.out)->required();
  train->add_option("--pair-limit", train_args.pair_limit,
                    "Use only the first N pairs");
  train->add_option("--shuffle-seed", train_args.shuffle_seed,
                    "Shuffle pairs deterministically before the prefix");
  train->add_option("--neg-ratio", train_args.neg_ratio);
  train->add_option("--seed", train_args.seed);
  train->add_option("--gamma", train_args.gamma);
  train->add_option("--max-iter", train_args.max_iter);
  train->add_option("--tol", train_args.tol);
  train->add_option("--u-percentile", train_args.u_percentile);
  train->add_option("--l-percentile", train_args.l_percentile);
  train->add_option("--sparsity", train_args.sparsity);
  train->add_option("--balance", train_args.balance);
  train->add_option("--prior", train_args.prior)
      ->check(CLI::IsMember({"identity", "covariance"}));

  AlignArgs align_args;
  auto* align = app.add_subcommand("align", "Align two document collections");
  align->add_option("--src-emb", align_args.src_emb)->required();
  align->add_option("--src-manifest", align_args.src_manifest)->required();
  align->add_option("--tgt-emb", align_args.tgt_emb)->required();
  align->add_option("--tgt-manifest", align_args.tgt_manifest)->required();
  align->add_option("--weighting", align_args.weighting,
                    "uniform, sl, idf or slidf");
  align->add_option("--metric", align_args.metric,
                    "euclidean, cosine or learned:<path>");
  align->add_option("--matching", align_args.matching, "one-to-one or argmin");
  align->add_flag("--date-filter", align_args.date_filter,
                  "Only score same-date pairs");
  align->add_option("--out-dir", align_args.out_dir)->required();
  align->add_option("--jobs", align_args.jobs, "Worker threads for scoring");

  std::string eval_matched, eval_gold;
  auto* eval = app.add_subcommand("eval", "Recall against a gold alignment");
  eval->add_option("--matched", eval_matched)->required();
  eval->add_option("--gold", eval_gold)->required();

  GmdArgs gmd_args;
  auto* gmd = app.add_subcommand("gmd", "Print the flow trace for one pair");
  gmd->add_option("--src-emb", gmd_args.src_emb)->required();
  gmd->add_option("--src-manifest", gmd_args.src_manifest)->required();
  gmd->add_option("--tgt-emb", gmd_args.tgt_emb)->required();
  gmd->add_option("--tgt-manifest", gmd_args.tgt_manifest)->required();
  gmd->add_option("--src-doc", gmd_args.src_doc)->required();
  gmd->add_option("--tgt-doc", gmd_args.tgt_doc)->required();
  gmd->add_option("--weighting", gmd_args.weighting);
  gmd->add_option("--metric", gmd_args.metric);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic bilingual corpus");
  synth->add_option("--docs", synth_args.docs);
  synth->add_option("--sentences-per-doc", synth_args.sentences_per_doc);
  synth->add_option("--dim", synth_args.dim);
  synth->add_option("--noise", synth_args.noise);
  synth->add_option("--transform", synth_args.transform)
      ->check(CLI::IsMember({"rotation", "affine"}));
  synth->add_option("--seed", synth_args.seed);
  synth->add_option("--out-dir", synth_args.out_dir)->required();
  synth->add_option("--train-pairs", synth_args.train_pairs,
                    "Extra parallel rows outside all documents");
  synth->add_option("--date-days", synth_args.date_days,
                    "Spread publication dates over this many days");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (train->parsed()) return run_train(train_args);
    if (align->parsed()) return run_align(align_args);
    if (eval->parsed()) return run_eval(eval_matched, eval_gold);
    if (gmd->parsed()) return run_gmd(gmd_args);
    if (synth->parsed()) return run_synth(synth_args);
  } catch (const Error& e) {
    std::cerr << "gmdalign: error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "gmdalign: unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
