// Python bindings: load, train, decode and score models from Python.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "g2p/decode.h"
#include "g2p/error.h"
#include "g2p/eval.h"
#include "g2p/lexicon.h"
#include "g2p/model_io.h"
#include "g2p/training.h"

namespace py = pybind11;
using namespace g2p;

namespace {

std::vector<std::vector<double>> attention_rows(const Mat<double>& a) {
  std::vector<std::vector<double>> rows(a.rows(), std::vector<double>(a.cols()));
  for (Eigen::Index t = 0; t < a.rows(); ++t)
    for (Eigen::Index i = 0; i < a.cols(); ++i) rows[t][i] = a(t, i);
  return rows;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["words"] = m.words;
  d["correct_words"] = m.correct_words;
  d["ref_phonemes"] = m.ref_phonemes;
  d["substitutions"] = m.substitutions;
  d["insertions"] = m.insertions;
  d["deletions"] = m.deletions;
  d["word_accuracy"] = m.word_accuracy();
  d["phoneme_error_rate"] = m.ref_phonemes ? py::cast(m.phoneme_error_rate()) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Attentive GRU encoder-decoder for grapheme-to-phoneme conversion";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DecodeError>(m, "DecodeError", base.ptr());

  py::class_<LexiconEntry>(m, "LexiconEntry")
      .def(py::init<std::string, std::vector<std::string>>(), py::arg("word"), py::arg("phonemes"))
      .def_readwrite("word", &LexiconEntry::word)
      .def_readwrite("phonemes", &LexiconEntry::phonemes)
      .def("__eq__", [](const LexiconEntry& a, const LexiconEntry& b) {
        return a.word == b.word && a.phonemes == b.phonemes;
      })
      .def("__repr__", [](const LexiconEntry& e) {
        std::string s = "LexiconEntry(" + e.word + ":";
        for (const auto& p : e.phonemes) s += " " + p;
        return s + ")";
      });

  py::class_<Lexicon>(m, "Lexicon")
      .def_readonly("entries", &Lexicon::entries)
      .def_readonly("alternates", &Lexicon::alternates);

  m.def("parse_lexicon", [](std::string_view text) { return parse_lexicon_text(text); },
        py::arg("text"));
  m.def("load_lexicon", [](const std::filesystem::path& p) { return load_lexicon(p); },
        py::arg("path"));
  m.def("normalize_word", &normalize_word, py::arg("word"));
  m.def("graphemes_of", &graphemes_of, py::arg("word"));

  py::class_<DatasetSplit>(m, "DatasetSplit")
      .def(py::init<>())
      .def_readwrite("train", &DatasetSplit::train)
      .def_readwrite("validation", &DatasetSplit::validation)
      .def_readwrite("test", &DatasetSplit::test);
  m.def("split_dataset",
        [](const std::vector<LexiconEntry>& entries, std::uint64_t seed) {
          return split_dataset(entries, seed);
        },
        py::arg("entries"), py::arg("seed"));

  py::class_<Model>(m, "Model")
      .def_property_readonly("graphemes", [](const Model& x) { return x.vocabs.graphemes.tokens(); })
      .def_property_readonly("phonemes", [](const Model& x) { return x.vocabs.phonemes.tokens(); })
      .def_property_readonly("embed_dim", [](const Model& x) { return x.params.dims.embed; })
      .def_property_readonly("hidden_dim", [](const Model& x) { return x.params.dims.hidden; })
      .def_property_readonly("attention_dim", [](const Model& x) { return x.params.dims.attention; })
      .def_property_readonly("parameter_count", [](const Model& x) { return x.params.parameter_count(); })
      .def_readwrite("metadata", &Model::metadata);

  m.def("load_model", [](const std::filesystem::path& p) { return load_model(p); }, py::arg("path"));
  m.def("save_model", [](const Model& x, const std::filesystem::path& p) { save_model(x, p); },
        py::arg("model"), py::arg("path"));
  m.def("serialize_model", [](const Model& x) { return py::bytes(serialize_model(x)); },
        py::arg("model"));
  m.def("deserialize_model", [](const py::bytes& b) { return deserialize_model(std::string(b)); },
        py::arg("data"));

  py::class_<DecodeResult>(m, "DecodeResult")
      .def_readonly("ids", &DecodeResult::ids)
      .def_readonly("tokens", &DecodeResult::tokens)
      .def_readonly("log_prob", &DecodeResult::log_prob)
      .def_readonly("step_log_probs", &DecodeResult::step_log_probs)
      .def_readonly("terminated", &DecodeResult::terminated)
      .def_property_readonly("attention", [](const DecodeResult& r) { return attention_rows(r.attention); });

  m.def("greedy_decode",
        [](const Model& x, std::string_view word, std::optional<int> max_len) {
          return greedy_decode(word, x, max_len);
        },
        py::arg("model"), py::arg("word"), py::arg("max_len") = py::none());
  m.def("beam_decode",
        [](const Model& x, std::string_view word, int width, std::optional<int> max_len,
           bool length_normalize) { return beam_decode(word, x, width, max_len, length_normalize); },
        py::arg("model"), py::arg("word"), py::arg("width"), py::arg("max_len") = py::none(),
        py::arg("length_normalize") = false);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("patience", &TrainConfig::patience)
      .def_readwrite("lr_decay", &TrainConfig::lr_decay)
      .def_readwrite("min_lr", &TrainConfig::min_lr)
      .def_readwrite("clip_norm", &TrainConfig::clip_norm)
      .def_readwrite("embed", &TrainConfig::embed)
      .def_readwrite("hidden", &TrainConfig::hidden)
      .def_readwrite("attention", &TrainConfig::attention)
      .def_readwrite("seed", &TrainConfig::seed)
      .def("validate", &TrainConfig::validate);

  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("epoch", &EpochRecord::epoch)
      .def_readonly("train_loss", &EpochRecord::train_loss)
      .def_readonly("val_loss", &EpochRecord::val_loss)
      .def_readonly("val_word_acc", &EpochRecord::val_word_acc)
      .def_readonly("learning_rate", &EpochRecord::learning_rate);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("model", &TrainResult::model)
      .def_property_readonly("history", [](const TrainResult& r) { return r.history.epochs; })
      .def_readonly("best_epoch", &TrainResult::best_epoch);

  // The callback runs with the GIL held; training itself releases it.
  m.def("train",
        [](const DatasetSplit& split, const TrainConfig& config, std::optional<py::function> on_epoch) {
          EpochCallback cb;
          if (on_epoch)
            cb = [&](const EpochRecord& r) {
              py::gil_scoped_acquire gil;
              (*on_epoch)(r);
            };
          py::gil_scoped_release release;
          return train(split, config, cb);
        },
        py::arg("split"), py::arg("config") = TrainConfig{}, py::arg("on_epoch") = py::none());

  m.def("evaluate",
        [](const Model& x, const std::vector<LexiconEntry>& entries,
           const std::vector<LexiconEntry>& train_entries, int beam_width) {
          const auto r = evaluate(x, entries, word_set(train_entries), {.beam_width = beam_width});
          py::dict d;
          d["overall"] = metrics_dict(r.overall);
          d["oov"] = r.oov ? py::object(metrics_dict(*r.oov)) : py::none();
          return d;
        },
        py::arg("model"), py::arg("entries"), py::arg("train_entries"), py::arg("beam_width") = 1);

  m.def("edit_distance",
        [](const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
          const auto s = edit_distance(hyp, ref);
          py::dict d;
          d["distance"] = s.distance;
          d["substitutions"] = s.substitutions;
          d["insertions"] = s.insertions;
          d["deletions"] = s.deletions;
          return d;
        },
        py::arg("hyp"), py::arg("ref"));
}
