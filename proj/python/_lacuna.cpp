// Copyright 2026 The Lacuna Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// pybind11 bindings for the core library. Structured results cross the
// boundary as JSON text; the Python package decodes them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "json.hpp"
#include "lacuna/cloze.hpp"
#include "lacuna/corpus.hpp"
#include "lacuna/error.hpp"
#include "lacuna/nameaudit.hpp"
#include "lacuna/scoring.hpp"
#include "lacuna/stats.hpp"
#include "lacuna/strsearch.hpp"
#include "lacuna/timeline.hpp"

namespace py = pybind11;
using lacuna::Sidedness;

namespace {

using Vec = std::vector<double>;

std::string dump(const nlohmann::ordered_json& j) { return j.dump(); }

Sidedness side(const std::string& s) { return lacuna::sidedness_from_string(s); }

std::string count_names(const std::vector<std::string>& names, const std::string& text,
                        bool word_boundaries) {
  lacuna::AhoCorasick automaton(names);
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (const auto& p : automaton.patterns()) counts[p] = 0;
  automaton.scan(text, [&](const lacuna::AhoCorasick::Match& m) {
    const auto& p = automaton.pattern(m.pattern);
    if (!word_boundaries || lacuna::is_word_delimited(text, m.end - p.size(), m.end)) {
      counts[p] = counts[p].get<std::int64_t>() + 1;
    }
  });
  return counts.dump();
}

lacuna::ClozeInstance make_instance(const std::string& csv, const std::string& kind,
                                    std::size_t position, std::size_t k) {
  const auto timeline = lacuna::parse_timeline_csv(csv);
  switch (lacuna::mask_kind_from_string(kind)) {
    case lacuna::MaskKind::kFull:
      return lacuna::mask_full(timeline, position);
    case lacuna::MaskKind::kPartial:
      return lacuna::mask_partial(timeline, position, k);
    case lacuna::MaskKind::kNgram:
      return lacuna::mask_ngram(timeline, position, k);
  }
  throw lacuna::InvalidArgument("unknown mask kind: " + kind);
}

}  // namespace

PYBIND11_MODULE(_lacuna, m) {
  m.doc() = "Native core of the lacuna toolkit";
  m.attr("__version__") = LACUNA_VERSION;

  auto base = py::register_exception<lacuna::Error>(m, "LacunaError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const lacuna::InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const lacuna::MissingInput& e) {
      PyErr_SetString(PyExc_FileNotFoundError, e.what());
    }
  });
  (void)base;

  m.def("bm_contains",
        [](const std::string& text, const std::string& pattern) {
          return lacuna::bm_contains(text, pattern);
        },
        py::arg("text"), py::arg("pattern"));
  m.def("segment_sentences",
        [](const std::string& text) { return lacuna::segment_sentences(text); });
  m.def("normalize", [](const std::string& text) { return lacuna::normalize(text); });
  m.def("count_names", &count_names, py::arg("names"), py::arg("text"),
        py::arg("word_boundaries") = true);

  m.def("tfidf_similarity",
        [](const std::string& a, const std::string& b) { return lacuna::tfidf_similarity(a, b); });
  m.def("cosine", [](const Vec& u, const Vec& v) { return lacuna::cosine(u, v); });
  m.def("macro_f1",
        [](const Vec& scores, const std::vector<int>& labels, double threshold) {
          return lacuna::macro_f1(scores, labels, threshold);
        });
  m.def("tune_threshold_json", [](const Vec& scores, const std::vector<int>& labels) {
    return dump(lacuna::to_json(lacuna::tune_threshold(scores, labels)));
  });

  m.def("sign_test_json", [](const Vec& a, const Vec& b, const std::string& s) {
    return dump(lacuna::to_json(lacuna::sign_test(a, b, side(s))));
  });
  m.def("paired_t_json", [](const Vec& a, const Vec& b, const std::string& s) {
    return dump(lacuna::to_json(lacuna::paired_t(a, b, side(s))));
  });
  m.def("wilcoxon_json", [](const Vec& a, const Vec& b, const std::string& s) {
    return dump(lacuna::to_json(lacuna::wilcoxon_signed_rank(a, b, side(s))));
  });
  m.def("welch_t_json", [](const Vec& a, const Vec& b, const std::string& s) {
    return dump(lacuna::to_json(lacuna::welch_t(a, b, side(s))));
  });
  m.def("mann_whitney_u_json", [](const Vec& a, const Vec& b, const std::string& s) {
    return dump(lacuna::to_json(lacuna::mann_whitney_u(a, b, side(s))));
  });
  m.def("permutation_mean_test_json",
        [](const Vec& a, const Vec& b, std::size_t iterations, std::uint64_t seed,
           const std::string& s) {
          return dump(lacuna::to_json(
              lacuna::permutation_mean_test(a, b, iterations, seed, side(s))));
        });
  m.def("cliffs_delta_json", [](const Vec& a, const Vec& b) {
    return dump(lacuna::to_json(lacuna::cliffs_delta(a, b)));
  });
  m.def("hedges_g_json", [](const Vec& a, const Vec& b) {
    return dump(lacuna::to_json(lacuna::hedges_g(a, b)));
  });
  m.def("holm_adjust", [](const Vec& p) { return lacuna::holm_adjust(p); });
  m.def("midranks", [](const Vec& x) { return lacuna::midranks(x); });
  m.def("derive_seed", &lacuna::derive_seed, py::arg("seed"), py::arg("stream"));

  m.def("render_timeline", [](const std::string& csv) {
    return lacuna::render_timeline(lacuna::parse_timeline_csv(csv));
  });
  m.def("mask_json",
        [](const std::string& csv, const std::string& kind, std::size_t position,
           std::size_t k) { return dump(lacuna::to_json(make_instance(csv, kind, position, k))); },
        py::arg("csv"), py::arg("kind"), py::arg("position"), py::arg("k") = 1);
  m.def("render_prompt_json",
        [](const std::string& instance_json, const std::string& template_id, bool hint) {
          const auto instance = lacuna::cloze_from_json(nlohmann::json::parse(instance_json));
          const auto prompt = lacuna::render_cloze_prompt(
              instance, lacuna::template_id_from_string(template_id), hint);
          nlohmann::ordered_json j;
          j["system"] = prompt.system ? nlohmann::ordered_json(*prompt.system) : nullptr;
          j["user"] = prompt.user;
          return j.dump();
        },
        py::arg("instance_json"), py::arg("template"), py::arg("hint") = false);
}
