/**
 * gmdalign
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <cmath>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gmdalign/corpus.hpp"
#include "gmdalign/errors.hpp"

namespace gmdalign {

// A document with its normalized bag-of-sentences mass distribution.
// Weights are strictly positive and sum to 1.
struct WeightedDocument {
  const Document* doc = nullptr;
  std::vector<double> weights;
};

enum class WeightScheme { Uniform, SentenceLength, Idf, Slidf };

inline const char* weight_scheme_name(WeightScheme s) {
  switch (s) {
    case WeightScheme::Uniform: return "uniform";
    case WeightScheme::SentenceLength: return "sl";
    case WeightScheme::Idf: return "idf";
    case WeightScheme::Slidf: return "slidf";
  }
  return "?";
}

// Sentence-level document frequencies over one collection.
struct IdfTable {
  std::size_t total_docs = 0;
  std::unordered_map<std::string, std::size_t> doc_freq;

  std::size_t freq(const SentenceRef& s) const {
    const auto it = doc_freq.find(sentence_key(s));
    return it == doc_freq.end() ? 0 : it->second;
  }
};

inline IdfTable build_idf_table(std::span<const Document> docs) {
  IdfTable table;
  table.total_docs = docs.size();
  std::unordered_map<std::string, std::size_t> seen_in;  // key -> last doc index
  std::size_t doc_index = 0;
  for (const auto& doc : docs) {
    ++doc_index;
    for (const auto& s : doc.sentences) {
      const std::string key = sentence_key(s);
      auto [it, inserted] = seen_in.emplace(key, doc_index);
      if (!inserted && it->second == doc_index) continue;  // same doc, count once
      it->second = doc_index;
      ++table.doc_freq[key];
    }
  }
  return table;
}

namespace detail {

inline WeightedDocument normalize_weights(const Document& doc,
                                          std::vector<double> raw) {
  double sum = 0.0;
  for (double w : raw) sum += w;
  for (double& w : raw) w /= sum;
  return WeightedDocument{&doc, std::move(raw)};
}

// 1 + ln((N+1)/(1+df)); >= 1 for df in [0, N].
inline double idf_raw(const IdfTable& table, const SentenceRef& s) {
  const double n = static_cast<double>(table.total_docs);
  const double df = static_cast<double>(table.freq(s));
  return 1.0 + std::log((n + 1.0) / (1.0 + df));
}

}  // namespace detail

inline WeightedDocument weight_uniform(const Document& doc) {
  return WeightedDocument{
      &doc, std::vector<double>(doc.sentences.size(),
                                1.0 / static_cast<double>(doc.sentences.size()))};
}

// weight_i = count(i) * |i| / sum over the document.
inline WeightedDocument weight_sl(const Document& doc) {
  std::vector<double> raw;
  raw.reserve(doc.sentences.size());
  for (const auto& s : doc.sentences)
    raw.push_back(static_cast<double>(s.occurrence_count) * s.token_count);
  return detail::normalize_weights(doc, std::move(raw));
}

inline WeightedDocument weight_idf(const Document& doc, const IdfTable& table) {
  if (table.total_docs == 0)
    throw EmptyTableError("IDF table built over zero documents");
  std::vector<double> raw;
  raw.reserve(doc.sentences.size());
  for (const auto& s : doc.sentences) raw.push_back(detail::idf_raw(table, s));
  return detail::normalize_weights(doc, std::move(raw));
}

// Product of the sentence-length and IDF raw factors, renormalized.
inline WeightedDocument weight_slidf(const Document& doc, const IdfTable& table) {
  if (table.total_docs == 0)
    throw EmptyTableError("IDF table built over zero documents");
  std::vector<double> raw;
  raw.reserve(doc.sentences.size());
  for (const auto& s : doc.sentences)
    raw.push_back(static_cast<double>(s.occurrence_count) * s.token_count *
                  detail::idf_raw(table, s));
  return detail::normalize_weights(doc, std::move(raw));
}

inline WeightedDocument apply_weighting(const Document& doc, WeightScheme scheme,
                                        const IdfTable* table = nullptr) {
  switch (scheme) {
    case WeightScheme::Uniform: return weight_uniform(doc);
    case WeightScheme::SentenceLength: return weight_sl(doc);
    case WeightScheme::Idf:
      if (!table) throw EmptyTableError("IDF weighting needs an IdfTable");
      return weight_idf(doc, *table);
    case WeightScheme::Slidf:
      if (!table) throw EmptyTableError("SLIDF weighting needs an IdfTable");
      return weight_slidf(doc, *table);
  }
  throw ValidationError("unknown weighting scheme");
}

}  // namespace gmdalign
