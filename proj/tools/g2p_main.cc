// g2p: train, evaluate and run grapheme-to-phoneme models.
//
// Exit codes: 0 success, 2 usage or input error, 3 corrupt model file,
// 1 anything else.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>

#include "g2p/decode.h"
#include "g2p/error.h"
#include "g2p/eval.h"
#include "g2p/lexicon.h"
#include "g2p/model_io.h"
#include "g2p/training.h"

namespace fs = std::filesystem;

namespace {

constexpr int kUsage = 2;
constexpr int kCorrupt = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

g2p::Lexicon read_lexicon(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("cannot read lexicon: " + path);
  auto lex = g2p::load_lexicon(path);
  if (lex.entries.empty()) throw UsageError("lexicon has no entries: " + path);
  return lex;
}

g2p::Model read_model(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("cannot read model: " + path);
  return g2p::load_model(fs::path(path));
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

// One row per decoder step (labelled with the emitted token), one column
// per input position (graphemes then the end marker).
void write_attention_csv(const std::string& path, const std::string& word, const g2p::Model& model,
                         const g2p::DecodeResult& r) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write attention CSV: " + path);
  out << "output";
  for (const auto& g : g2p::graphemes_of(g2p::normalize_word(word))) out << ',' << csv_field(g);
  out << ',' << csv_field(model.vocabs.graphemes.token(g2p::Vocabulary::kEos)) << '\n';
  out << std::fixed << std::setprecision(6);
  for (Eigen::Index t = 0; t < r.attention.rows(); ++t) {
    const bool eos = t == static_cast<Eigen::Index>(r.ids.size());
    out << csv_field(eos ? model.vocabs.phonemes.token(g2p::Vocabulary::kEos) : r.tokens[t]);
    for (Eigen::Index i = 0; i < r.attention.cols(); ++i) out << ',' << r.attention(t, i);
    out << '\n';
  }
  if (!out) throw g2p::Error("failed writing " + path);
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) out += (out.empty() ? "" : " ") + t;
  return out;
}

int run_train(const std::string& lexicon_path, const std::string& out_path,
              const g2p::TrainConfig& config, bool quiet) {
  try {
    config.validate();
  } catch (const g2p::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const auto lex = read_lexicon(lexicon_path);
  if (lex.entries.size() < 10) throw UsageError("lexicon needs at least 10 entries to split");
  const auto split = g2p::split_dataset(lex.entries, config.seed);
  if (!quiet)
    std::cerr << "entries " << lex.entries.size() << " (train " << split.train.size()
              << ", validation " << split.validation.size() << ", test " << split.test.size()
              << "), " << lex.alternates.size() << " alternate pronunciations ignored\n";

  auto result = g2p::train(split, config, [&](const g2p::EpochRecord& r) {
    if (quiet) return;
    std::cerr << "epoch " << r.epoch << "/" << config.epochs << std::fixed << std::setprecision(4)
              << " train_loss " << r.train_loss << " val_loss " << r.val_loss << " val_acc "
              << r.val_word_acc << std::defaultfloat << " lr " << r.learning_rate << '\n';
  });
  result.model.metadata["train.best_epoch"] = std::to_string(result.best_epoch);

  g2p::save_model(result.model, fs::path(out_path));
  const std::string history_path = out_path + ".history.csv";
  std::ofstream history(history_path, std::ios::binary | std::ios::trunc);
  if (!history) throw UsageError("cannot write " + history_path);
  result.history.write_csv(history);
  if (!quiet) std::cerr << "wrote " << out_path << " and " << history_path << '\n';
  return 0;
}

int run_g2p(const std::string& model_path, const std::string& word, int beam,
            const std::string& attention_path) {
  const auto model = read_model(model_path);
  std::string normalized;
  try {
    normalized = g2p::normalize_word(word);
  } catch (const g2p::Error& e) {
    throw UsageError(e.what());
  }
  const auto result = beam <= 1 ? g2p::greedy_decode(normalized, model)
                                : g2p::beam_decode(normalized, model, beam).front();
  std::cout << join(result.tokens) << '\n';
  if (!attention_path.empty()) write_attention_csv(attention_path, normalized, model, result);
  return 0;
}

int run_eval(const std::string& model_path, const std::string& lexicon_path,
             const std::string& split_name, std::uint64_t seed, int beam,
             const std::string& csv_path) {
  const auto model = read_model(model_path);
  const auto lex = read_lexicon(lexicon_path);
  if (lex.entries.size() < 10) throw UsageError("lexicon needs at least 10 entries to split");
  const auto split = g2p::split_dataset(lex.entries, seed);
  const auto& entries = split_name == "train"        ? split.train
                        : split_name == "validation" ? split.validation
                                                     : split.test;
  if (entries.empty()) throw UsageError("the " + split_name + " split is empty");

  // Symbols the model never saw mean the split differs from the one it was
  // trained on (different lexicon or seed), or the data is genuinely new.
  std::set<std::string> unknown_graphemes, unknown_phonemes;
  for (const auto& e : entries) {
    for (const auto& g : g2p::graphemes_of(e.word))
      if (!model.vocabs.graphemes.find(g)) unknown_graphemes.insert(g);
    for (const auto& p : e.phonemes)
      if (!model.vocabs.phonemes.find(p)) unknown_phonemes.insert(p);
  }
  if (!unknown_graphemes.empty() || !unknown_phonemes.empty()) {
    std::cerr << "note: " << unknown_graphemes.size() << " grapheme(s) and "
              << unknown_phonemes.size()
              << " phoneme(s) are not in the model vocabulary and map to <unk>";
    const auto seed_it = model.metadata.find("train.seed");
    if (seed_it != model.metadata.end() && seed_it->second != std::to_string(seed))
      std::cerr << " (model was trained with --seed " << seed_it->second << ")";
    std::cerr << '\n';
  }

  const auto report = g2p::evaluate(model, entries, g2p::word_set(split.train), {.beam_width = beam});
  std::cout << "split " << split_name << " (seed " << seed << ")\n";
  report.write_text(std::cout);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw UsageError("cannot write " + csv_path);
    report.write_csv(csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grapheme-to-phoneme conversion with an attentive GRU encoder-decoder"};
  app.require_subcommand(1);

  g2p::TrainConfig config;
  std::string lexicon_path, out_path, model_path, word, attention_path, split_name = "test",
                                                                        csv_path;
  std::uint64_t eval_seed = 0;
  int beam = 1;
  bool quiet = false;

  auto* train = app.add_subcommand("train", "Train a model on a lexicon's 70% training split");
  train->add_option("--lexicon", lexicon_path, "Pronunciation dictionary")->required();
  train->add_option("--out", out_path, "Model file to write")->required();
  train->add_option("--seed", config.seed, "Seed for the split, initialisation and shuffling")
      ->capture_default_str();
  train->add_option("--epochs", config.epochs, "Training epochs")->capture_default_str();
  train->add_option("--lr", config.learning_rate, "Initial Adam learning rate")->capture_default_str();
  train->add_option("--batch", config.batch_size, "Mini-batch size")->capture_default_str();
  train->add_option("--hidden", config.hidden, "Encoder/decoder hidden size")->capture_default_str();
  train->add_option("--embed", config.embed, "Embedding size")->capture_default_str();
  train->add_option("--patience", config.patience, "Epochs without improvement before decay")
      ->capture_default_str();
  train->add_option("--clip", config.clip_norm, "Global gradient-norm clip (0 disables)")
      ->capture_default_str();
  train->add_flag("--quiet", quiet, "No progress output");

  auto* convert = app.add_subcommand("g2p", "Convert one word to phonemes");
  convert->add_option("--model", model_path, "Model file")->required();
  convert->add_option("--word", word, "Word to convert")->required();
  convert->add_option("--beam", beam, "Beam width (1 = greedy)")->check(CLI::PositiveNumber);
  convert->add_option("--dump-attention", attention_path, "Write the attention matrix as CSV");

  auto* eval = app.add_subcommand("eval", "Score a model on one split of a lexicon");
  eval->add_option("--model", model_path, "Model file")->required();
  eval->add_option("--lexicon", lexicon_path, "Pronunciation dictionary")->required();
  eval->add_option("--split", split_name, "Which split to score")
      ->check(CLI::IsMember({"train", "validation", "test"}))
      ->capture_default_str();
  eval->add_option("--seed", eval_seed, "Seed used at training time")->required();
  eval->add_option("--beam", beam, "Beam width (1 = greedy)")->check(CLI::PositiveNumber);
  eval->add_option("--csv", csv_path, "Also write the report as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*train) return run_train(lexicon_path, out_path, config, quiet);
    if (*convert) return run_g2p(model_path, word, beam, attention_path);
    return run_eval(model_path, lexicon_path, split_name, eval_seed, beam, csv_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const g2p::FormatError& e) {
    std::cerr << "error: corrupt model: " << e.what() << '\n';
    return kCorrupt;
  } catch (const g2p::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const g2p::DecodeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const g2p::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
