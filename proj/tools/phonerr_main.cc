// phonerr: batch CLI for phoneme similarity matrices, pronunciation scoring,
// soft losses, CTC decoding, and substitution simulation.
//
// Exit codes: 0 success, 1 partial success (some records skipped),
// 2 usage or input error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "phonerr/ctc.h"
#include "phonerr/inventory.h"
#include "phonerr/metrics.h"
#include "phonerr/similarity.h"
#include "phonerr/simulate.h"

using json = nlohmann::json;
using namespace phonerr;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitPartial = 1;
constexpr int kExitError = 2;

struct GlobalOptions {
  std::string inventory_path;
  std::uint64_t seed = 0;
  int threads = 1;
};

InventoryLoadResult load_inventory_from(const GlobalOptions& global) {
  if (global.inventory_path.empty()) return load_inventory();
  return load_inventory(global.inventory_path);
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

// Output sink: file when --out is given, stdout otherwise.
class OutputSink {
 public:
  explicit OutputSink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) {
        throw std::runtime_error("cannot open output file '" + path + "'");
      }
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<std::string> read_lines(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(std::string("cannot open ") + what + " file '" + path +
                             "'");
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// Batched JSONL reader: record streams are processed in bounded-memory
// chunks so corpora larger than memory stay scoreable.
constexpr std::size_t kBatchSize = 4096;

class JsonlReader {
 public:
  JsonlReader(const std::string& path, const char* what) : in_(path) {
    if (!in_) {
      throw std::runtime_error(std::string("cannot open ") + what + " file '" + path +
                               "'");
    }
  }

  // Fills up to max_lines non-empty lines; returns false once exhausted.
  bool next_batch(std::size_t max_lines, std::vector<std::string>& lines,
                  std::vector<std::size_t>& line_numbers) {
    lines.clear();
    line_numbers.clear();
    std::string line;
    while (lines.size() < max_lines && std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      lines.push_back(line);
      line_numbers.push_back(line_no_);
    }
    return !lines.empty();
  }

 private:
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

std::vector<std::string> string_array(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_array()) {
    throw std::runtime_error(std::string("missing or non-array field '") + field + "'");
  }
  std::vector<std::string> out;
  for (const auto& item : j[field]) {
    if (!item.is_string()) {
      throw std::runtime_error(std::string("field '") + field +
                               "' must contain strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<std::vector<double>> double_matrix(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_array()) {
    throw std::runtime_error(std::string("missing or non-array field '") + field + "'");
  }
  std::vector<std::vector<double>> rows;
  for (const auto& row : j[field]) {
    if (!row.is_array()) {
      throw std::runtime_error(std::string("field '") + field +
                               "' must be an array of arrays");
    }
    rows.push_back(row.get<std::vector<double>>());
  }
  return rows;
}

std::string record_id(const json& j) {
  if (!j.contains("id")) throw std::runtime_error("record has no 'id' field");
  return j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
}

ProbMatrix prob_matrix_of(const json& j) {
  if (j.contains("probs") && j.contains("logits")) {
    throw std::runtime_error("record has both 'probs' and 'logits'");
  }
  if (j.contains("probs")) return ProbMatrix::from_probs(double_matrix(j, "probs"));
  if (j.contains("logits")) return ProbMatrix::from_logits(double_matrix(j, "logits"));
  throw std::runtime_error("record needs a 'probs' or 'logits' field");
}

struct RecordOutcome {
  bool ok = false;
  std::string text;  // JSON line or error message
};

// Runs fn(i) for every record index on `threads` workers; results land in
// input order, so the emitted stream is identical for any thread count.
template <typename Fn>
std::vector<RecordOutcome> process_records(std::size_t count, int threads, Fn fn) {
  std::vector<RecordOutcome> results(count);
  auto worker = [&](std::size_t start, std::size_t stride) {
    for (std::size_t i = start; i < count; i += stride) {
      try {
        results[i] = {true, fn(i)};
      } catch (const std::exception& e) {
        results[i] = {false, e.what()};
      }
    }
  };
  const std::size_t stride = static_cast<std::size_t>(std::max(1, threads));
  if (stride <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < stride; ++t) pool.emplace_back(worker, t, stride);
    for (std::thread& t : pool) t.join();
  }
  return results;
}

struct StreamTotals {
  std::size_t emitted = 0;
  std::size_t skipped = 0;

  int exit_code() const {
    if (emitted == 0 && skipped > 0) return kExitError;
    return skipped > 0 ? kExitPartial : kExitSuccess;
  }
};

// Emits ok lines in input order and logs failures by source line number.
void drain_results(const std::vector<RecordOutcome>& results,
                   const std::vector<std::size_t>& line_numbers, std::ostream& out,
                   const char* what, StreamTotals& totals) {
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].ok) {
      ++totals.emitted;
      out << results[i].text << '\n';
    } else {
      ++totals.skipped;
      std::cerr << what << " record at line " << line_numbers[i]
                << " skipped: " << results[i].text << '\n';
    }
  }
}

json ops_to_json(const AlignmentResult& alignment) {
  json ops = json::array();
  for (const EditOp& op : alignment.ops) {
    json entry;
    switch (op.kind) {
      case EditKind::Match: entry["op"] = "match"; break;
      case EditKind::Substitute: entry["op"] = "substitute"; break;
      case EditKind::Insert: entry["op"] = "insert"; break;
      case EditKind::Delete: entry["op"] = "delete"; break;
    }
    if (op.ref) entry["ref"] = *op.ref;
    if (op.hyp) entry["hyp"] = *op.hyp;
    ops.push_back(std::move(entry));
  }
  return ops;
}

// ---------------------------------------------------------------------------
// similarity

struct SimilarityArgs {
  std::string method = "heuristic";
  std::string vectors_path;
  std::vector<double> weights;
  std::string out_path;
};

int cmd_similarity(const GlobalOptions& global, const SimilarityArgs& args) {
  auto [inventory, features] = load_inventory_from(global);
  std::optional<SimilarityMatrix> matrix;
  if (args.method == "heuristic") {
    if (args.weights.empty()) {
      matrix = heuristic_similarity(inventory, features);
    } else {
      matrix = heuristic_similarity(inventory, features, args.weights);
    }
  } else if (args.method == "embedding") {
    if (args.vectors_path.empty()) {
      throw std::runtime_error("--method embedding requires --vectors");
    }
    matrix = embedding_similarity(load_embeddings(args.vectors_path, inventory));
  } else {
    throw std::runtime_error("unknown method '" + args.method +
                             "' (expected heuristic or embedding)");
  }
  save_matrix(*matrix, args.out_path);

  // Audit line; the matrix constructor has already enforced these.
  const int n = matrix->size();
  double min_v = 1.0, max_v = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      min_v = std::min(min_v, matrix->at(i, j));
      max_v = std::max(max_v, matrix->at(i, j));
    }
  }
  std::cout << "wrote " << args.out_path << ": " << n << "x" << n
            << " matrix, symmetric exactly, diagonal exactly 1, entries in ["
            << format_double(min_v) << ", " << format_double(max_v) << "]\n";
  return kExitSuccess;
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
  std::string input_path;
  std::string matrix_path;
  std::string articulatory_path;
  std::string vectors_path;
  std::string out_path;
  std::string summary_path;
  std::string alignment = "weighted";
  double tau_factor = 0.5;
};

struct TrackInput {
  std::vector<std::vector<double>> frames;
  std::vector<std::string> frame_targets;  // empty: derive uniformly from ref
};

int cmd_score(const GlobalOptions& global, const ScoreArgs& args) {
  auto [inventory, features] = load_inventory_from(global);
  SimilarityMatrix similarity = load_matrix(args.matrix_path, inventory);
  if (args.alignment != "weighted" && args.alignment != "unit") {
    throw std::runtime_error("--alignment must be 'weighted' or 'unit'");
  }

  std::optional<EmbeddingTable> refs;
  std::map<std::string, TrackInput> tracks;
  if (!args.articulatory_path.empty()) {
    if (args.vectors_path.empty()) {
      throw std::runtime_error("--articulatory requires --vectors (the reference "
                               "embedding table used for AER)");
    }
    refs = load_embeddings(args.vectors_path, inventory);
    for (const std::string& line : read_lines(args.articulatory_path, "articulatory")) {
      if (line.empty()) continue;
      json j = json::parse(line);
      TrackInput track;
      track.frames = double_matrix(j, "frames");
      if (j.contains("frame_targets")) {
        track.frame_targets = string_array(j, "frame_targets");
      }
      tracks[record_id(j)] = std::move(track);
    }
  }

  struct RecordMetrics {
    double per = 0.0, wper = 0.0;
    std::optional<double> aer;
  };

  JsonlReader reader(args.input_path, "scoring input");
  OutputSink sink(args.out_path);
  StreamTotals totals;
  double per_sum = 0.0, wper_sum = 0.0, aer_sum = 0.0;
  std::int64_t scored = 0, aer_count = 0;

  std::vector<std::string> batch;
  std::vector<std::size_t> line_numbers;
  while (reader.next_batch(kBatchSize, batch, line_numbers)) {
    std::vector<std::optional<RecordMetrics>> metrics(batch.size());
    auto results = process_records(batch.size(), global.threads, [&](std::size_t i) {
      json j = json::parse(batch[i]);
      const std::string id = record_id(j);
      const std::vector<std::string> ref = string_array(j, "ref");
      const std::vector<std::string> hyp = string_array(j, "hyp");

      // PER always uses the unit-cost alignment; WPER uses the weighted DP
      // by default, which among all alignments minimizes the weighted error
      // sum.
      AlignmentResult unit_alignment = align(ref, hyp, inventory);
      AlignmentResult scored_alignment = args.alignment == "weighted"
                                             ? align_weighted(ref, hyp, similarity)
                                             : unit_alignment;
      RecordMetrics m;
      m.per = per(unit_alignment);
      m.wper = wper(scored_alignment, similarity);

      json out;
      out["id"] = id;
      out["per"] = m.per;
      out["wper"] = m.wper;
      out["ops"] = ops_to_json(scored_alignment);
      if (refs) {
        auto it = tracks.find(id);
        if (it != tracks.end()) {
          ArticulatoryTrack track;
          track.frames = it->second.frames;
          track.frame_targets =
              it->second.frame_targets.empty()
                  ? uniform_frame_targets(ref, static_cast<int>(track.frames.size()))
                  : it->second.frame_targets;
          m.aer = aer(track, *refs, args.tau_factor);
          out["aer"] = *m.aer;
        }
      }
      metrics[i] = m;
      return out.dump();
    });
    drain_results(results, line_numbers, sink.stream(), "score", totals);
    // Sequential in-order reduction keeps the summary bytes independent of
    // the thread count.
    for (const auto& m : metrics) {
      if (!m) continue;
      ++scored;
      per_sum += m->per;
      wper_sum += m->wper;
      if (m->aer) {
        ++aer_count;
        aer_sum += *m->aer;
      }
    }
  }

  if (!args.summary_path.empty()) {
    std::ofstream summary(args.summary_path);
    if (!summary) {
      throw std::runtime_error("cannot open summary file '" + args.summary_path + "'");
    }
    summary << "metric\tmean\tcount\n";
    summary << "per\t" << format_double(scored > 0 ? per_sum / scored : 0.0) << '\t'
            << scored << '\n';
    summary << "wper\t" << format_double(scored > 0 ? wper_sum / scored : 0.0) << '\t'
            << scored << '\n';
    if (aer_count > 0) {
      summary << "aer\t" << format_double(aer_sum / aer_count) << '\t' << aer_count
              << '\n';
    }
  }
  return totals.exit_code();
}

// ---------------------------------------------------------------------------
// loss

struct LossArgs {
  std::string input_path;
  std::string matrix_path;
  std::string out_path;
  double lambda_ctc = kDefaultLambdaCtc;
  double lambda_map = kDefaultLambdaMap;
};

int cmd_loss(const GlobalOptions& global, const LossArgs& args) {
  auto [inventory, features] = load_inventory_from(global);
  NormalizedSimilarity s_hat =
      args.matrix_path.empty() ? NormalizedSimilarity::identity(inventory)
                               : normalize(load_matrix(args.matrix_path, inventory));
  if (!(args.lambda_ctc >= 0.0) || !(args.lambda_map >= 0.0)) {
    throw std::runtime_error("loss weights must be nonnegative");
  }

  JsonlReader reader(args.input_path, "loss input");
  OutputSink sink(args.out_path);
  StreamTotals totals;
  std::vector<std::string> batch;
  std::vector<std::size_t> line_numbers;
  while (reader.next_batch(kBatchSize, batch, line_numbers)) {
    auto results = process_records(batch.size(), global.threads, [&](std::size_t i) {
      json j = json::parse(batch[i]);
      const std::string id = record_id(j);
      ProbMatrix probs = prob_matrix_of(j);
      TargetSeq target(string_array(j, "target"), inventory);
      const std::string indexing = j.value("indexing", "frame");

      json out;
      out["id"] = id;
      if (indexing == "frame") {
        LossResult r = soft_ctc_loss(probs, target, s_hat);
        out["ctc_part"] = r.loss;
        out["map_part"] = 0.0;
        out["total"] = args.lambda_ctc * r.loss;
        out["grad_norm"] = r.grad.norm();
      } else if (indexing == "step") {
        LossResult r = soft_mapping_loss(probs, target, s_hat);
        out["ctc_part"] = 0.0;
        out["map_part"] = r.loss;
        out["total"] = args.lambda_map * r.loss;
        out["grad_norm"] = r.grad.norm();
      } else {
        throw std::runtime_error("indexing must be 'frame' or 'step', got '" +
                                 indexing + "'");
      }
      return out.dump();
    });
    drain_results(results, line_numbers, sink.stream(), "loss", totals);
  }
  return totals.exit_code();
}

// ---------------------------------------------------------------------------
// decode

struct DecodeArgs {
  std::string input_path;
  std::string out_path;
  bool greedy = false;
  std::size_t beam = 0;  // 0: greedy
};

int cmd_decode(const GlobalOptions& global, const DecodeArgs& args) {
  auto [inventory, features] = load_inventory_from(global);
  if (args.greedy && args.beam > 0) {
    throw std::runtime_error("--greedy and --beam are mutually exclusive");
  }

  JsonlReader reader(args.input_path, "decode input");
  OutputSink sink(args.out_path);
  StreamTotals totals;
  std::vector<std::string> batch;
  std::vector<std::size_t> line_numbers;
  while (reader.next_batch(kBatchSize, batch, line_numbers)) {
    auto results = process_records(batch.size(), global.threads, [&](std::size_t i) {
      json j = json::parse(batch[i]);
      const std::string id = record_id(j);
      ProbMatrix probs = prob_matrix_of(j);
      std::vector<std::string> phonemes = args.beam > 0
                                              ? beam_decode(probs, inventory, args.beam)
                                              : greedy_decode(probs, inventory);
      json out;
      out["id"] = id;
      out["phonemes"] = phonemes;
      return out.dump();
    });
    drain_results(results, line_numbers, sink.stream(), "decode", totals);
  }
  return totals.exit_code();
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string lexicon_path;
  std::string words_path;
  std::string pairs_path;
  std::string out_path;
  std::string stats_path;
  std::string mode = "all";
  double rate = 1.0;
  int max_subs = 1;  // 0: unlimited
};

int cmd_simulate(const GlobalOptions& global, const SimulateArgs& args) {
  auto [inventory, features] = load_inventory_from(global);
  Lexicon lexicon = load_lexicon(args.lexicon_path, inventory);
  std::vector<SubstitutionPair> pairs =
      args.pairs_path.empty() ? default_pairs()
                              : load_pairs(args.pairs_path, inventory, features);
  validate_pairs(pairs, inventory, features);

  InjectPolicy policy;
  if (args.mode == "all") {
    policy.mode = SubstitutionMode::All;
  } else if (args.mode == "vowel") {
    policy.mode = SubstitutionMode::Vowel;
  } else if (args.mode == "consonant") {
    policy.mode = SubstitutionMode::Consonant;
  } else {
    throw std::runtime_error("--mode must be all, vowel, or consonant");
  }
  policy.rate = args.rate;
  policy.max_subs = args.max_subs == 0 ? kUnlimitedSubs : args.max_subs;

  std::vector<std::string> words;
  if (!args.words_path.empty()) {
    for (const std::string& line : read_lines(args.words_path, "word list")) {
      std::istringstream tokens(line);
      std::string word;
      while (tokens >> word) words.push_back(word);
    }
  } else {
    for (const auto& [word, variants] : lexicon.entries) words.push_back(word);
  }

  OutputSink sink(args.out_path);
  CorpusStats stats;
  generate_corpus(
      words, lexicon, pairs, policy, global.seed,
      [&sink](const SimRecord& record) {
        json edits = json::array();
        for (const PhonemeEdit& e : record.edits) {
          edits.push_back({{"pos", e.position}, {"from", e.from}, {"to", e.to}});
        }
        json out;
        out["word"] = record.word;
        out["reference"] = record.reference;
        out["modified"] = record.modified;
        out["edits"] = std::move(edits);
        out["seed"] = record.seed;
        sink.stream() << out.dump() << '\n';
      },
      &stats);

  if (!args.stats_path.empty()) {
    std::ofstream out(args.stats_path);
    if (!out) {
      throw std::runtime_error("cannot open stats file '" + args.stats_path + "'");
    }
    out << "pair\tcount\n";
    for (const auto& [key, count] : stats.pair_counts) {
      out << key << '\t' << count << '\n';
    }
  }
  if (stats.words_skipped > 0) {
    std::cerr << "simulate: " << stats.words_skipped
              << " word(s) not found in the lexicon\n";
    return kExitPartial;
  }
  return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phonetic error detection toolkit"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--inventory", global.inventory_path,
                 "feature table TSV defining the phoneme inventory "
                 "(default: built-in 39-phoneme ARPAbet table)");
  app.add_option("--seed", global.seed, "RNG seed for simulation")
      ->capture_default_str();
  app.add_option("--threads", global.threads, "worker threads for record streams")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  SimilarityArgs sim_args;
  CLI::App* sim = app.add_subcommand("similarity", "build a phoneme similarity matrix");
  sim->add_option("--method", sim_args.method, "heuristic or embedding")
      ->capture_default_str();
  sim->add_option("--vectors", sim_args.vectors_path,
                  "embedding TSV (required for --method embedding)");
  sim->add_option("--weights", sim_args.weights,
                  "8 feature weights for the heuristic method (default: "
                  "0.2 0.1 0.15 0.15 0.1 0.2 0.2 0.1)")
      ->expected(8);
  sim->add_option("--out", sim_args.out_path, "output matrix CSV")->required();

  ScoreArgs score_args;
  CLI::App* score = app.add_subcommand("score", "PER/WPER/AER scoring of ref-hyp pairs");
  score->add_option("--input", score_args.input_path, "JSONL {id, ref, hyp}")
      ->required();
  score->add_option("--matrix", score_args.matrix_path, "similarity matrix CSV")
      ->required();
  score->add_option("--articulatory", score_args.articulatory_path,
                    "JSONL {id, frames, frame_targets?} enabling AER");
  score->add_option("--vectors", score_args.vectors_path,
                    "reference embedding TSV for AER");
  score->add_option("--tau-factor", score_args.tau_factor,
                    "AER threshold as a fraction of the largest reference distance")
      ->capture_default_str();
  score->add_option("--alignment", score_args.alignment,
                    "alignment for WPER: weighted (similarity-weighted DP) or unit")
      ->capture_default_str();
  score->add_option("--out", score_args.out_path, "output JSONL (default: stdout)");
  score->add_option("--summary", score_args.summary_path, "corpus-mean TSV");

  LossArgs loss_args;
  CLI::App* loss = app.add_subcommand("loss", "soft-CTC / soft-mapping loss evaluation");
  loss->add_option("--input", loss_args.input_path,
                   "JSONL {id, probs|logits, target, indexing: frame|step}")
      ->required();
  loss->add_option("--matrix", loss_args.matrix_path,
                   "similarity matrix CSV (default: identity = standard losses)");
  loss->add_option("--lambda-ctc", loss_args.lambda_ctc, "CTC loss weight")
      ->capture_default_str();
  loss->add_option("--lambda-map", loss_args.lambda_map, "mapping loss weight")
      ->capture_default_str();
  loss->add_option("--out", loss_args.out_path, "output JSONL (default: stdout)");

  DecodeArgs decode_args;
  CLI::App* decode = app.add_subcommand("decode", "decode frame probabilities");
  decode->add_option("--input", decode_args.input_path, "JSONL {id, probs|logits}")
      ->required();
  decode->add_flag("--greedy", decode_args.greedy, "greedy decode (default)");
  decode->add_option("--beam", decode_args.beam, "prefix beam search width");
  decode->add_option("--out", decode_args.out_path, "output JSONL (default: stdout)");

  SimulateArgs simulate_args;
  CLI::App* simulate =
      app.add_subcommand("simulate", "inject phoneme substitutions into lexicon words");
  simulate->add_option("--lexicon", simulate_args.lexicon_path, "CMUdict-format lexicon")
      ->required();
  simulate->add_option("--words", simulate_args.words_path,
                       "word list (default: every lexicon entry once)");
  simulate->add_option("--pairs", simulate_args.pairs_path,
                       "substitution pair TSV (default: built-in pair table)");
  simulate->add_option("--mode", simulate_args.mode, "all, vowel, or consonant")
      ->capture_default_str();
  simulate->add_option("--rate", simulate_args.rate,
                       "per-position substitution probability")
      ->capture_default_str();
  simulate->add_option("--max-subs", simulate_args.max_subs,
                       "per-word substitution cap (0 = unlimited)")
      ->capture_default_str();
  simulate->add_option("--out", simulate_args.out_path,
                       "output JSONL (default: stdout)");
  simulate->add_option("--stats", simulate_args.stats_path, "per-pair count TSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (sim->parsed()) return cmd_similarity(global, sim_args);
    if (score->parsed()) return cmd_score(global, score_args);
    if (loss->parsed()) return cmd_loss(global, loss_args);
    if (decode->parsed()) return cmd_decode(global, decode_args);
    if (simulate->parsed()) return cmd_simulate(global, simulate_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
