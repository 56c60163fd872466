#include <cstdio>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "fairqr/refine.hpp"

namespace fairqr {
namespace {

// Kept byte-for-byte in sync with prompts/fair_qr_prompt.txt.
constexpr std::string_view kDefaultTemplate =
    "You are a user who cares about the fairness of a search engine where searched "
    "documents are retrieved from different subgroups. \n"
    "You want to make sure the retrieved documents of query: {Query} are from diverse "
    "fairness groups quantified by a target distribution: {Target Exposure Distribution}, "
    "which shows the desired percentage of retrieved documents from each subgroup. The "
    "keys in the target distribution are the unique subgroups. The 'Unknown' subgroup "
    "means group information is missing or not applicable.\n"
    "Now, using the BM25 method, you got results of the first {Top_K} documents with a "
    "fairness group distribution of: {Current Exposure Distribution}. You want to achieve "
    "the target by adding keywords or phrase at the end of the original query with less "
    "jeopardize relevance. Therefore, you must add less keywords as possible to make the "
    "current results more align with our fairness target distribution and remain "
    "relevant. \n"
    "Let's try to focus on the subgroup that is most under-represented. In this case, "
    "it's the subgroup: {subgroup}. Show me your refined keywords that can help retrieve "
    "a composation of documents from different gender group closer to the target "
    "distribution. That is, knowing the retrieved documents have fewer than desired "
    "documents from group {subgroup}, you might want to include keywords about "
    "{subgroup}.    \n";

constexpr std::string_view kFormatInstruction =
    "Finish your reply with a single line of the form `REFINED_QUERY: <the original "
    "query followed by your added keywords>`.\n";

void replace_all(std::string& text, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

bool contains_phrase(const std::vector<std::string>& haystack,
                     const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > haystack.size()) return false;
  for (std::size_t i = 0; i + phrase.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < phrase.size() && match; ++j)
      match = haystack[i + j] == phrase[j];
    if (match) return true;
  }
  return false;
}

}  // namespace

std::string_view default_prompt_template() { return kDefaultTemplate; }

std::string render_distribution(const ExposureDistribution& dist,
                                const GroupSchema& schema) {
  if (dist.probabilities.size() != schema.size())
    throw Error(ErrorKind::dimension, "distribution does not match schema " + schema.category());
  std::string out = "{";
  for (std::size_t i = 0; i < schema.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", dist.probabilities[i]);
    if (i > 0) out += ", ";
    out += schema.label(i);
    out += ": ";
    out += buf;
  }
  out += "}";
  return out;
}

std::string render_prompt(std::string_view prompt_template, std::string_view query,
                          const GroupSchema& schema,
                          const ExposureDistribution& target,
                          const ExposureDistribution& current, std::size_t top_k,
                          std::string_view subgroup) {
  for (auto placeholder : kPromptPlaceholders)
    if (prompt_template.find(placeholder) == std::string_view::npos)
      throw Error(ErrorKind::prompt_template,
                  "prompt template lacks placeholder " + std::string(placeholder));

  std::string out(prompt_template);
  replace_all(out, "{Target Exposure Distribution}", render_distribution(target, schema));
  replace_all(out, "{Current Exposure Distribution}", render_distribution(current, schema));
  replace_all(out, "{Top_K}", std::to_string(top_k));
  replace_all(out, "{subgroup}", subgroup);
  // Last, so a query containing a placeholder-like string is left alone.
  replace_all(out, "{Query}", query);

  if (prompt_template.find(kRefinedQueryMarker) == std::string_view::npos) {
    if (!out.empty() && out.back() != '\n') out += '\n';
    out += kFormatInstruction;
  }
  return out;
}

std::string parse_refinement(std::string_view response, std::string_view fallback_query) {
  const auto pos = response.rfind(kRefinedQueryMarker);
  if (pos == std::string_view::npos)
    throw ParseError(std::string(fallback_query), std::string(response));
  auto text = trim(response.substr(pos + kRefinedQueryMarker.size()));
  if (text.empty()) throw ParseError(std::string(fallback_query), std::string(response));
  return std::string(text);
}

Lexicon read_lexicon(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::lexicon, std::string("lexicon file: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::lexicon, "lexicon must be a JSON object");
  Lexicon lexicon;
  for (const auto& [subgroup, words] : j.items()) {
    if (!words.is_array()) throw Error(ErrorKind::lexicon, "lexicon entry " + subgroup + " must be an array");
    auto& list = lexicon[subgroup];
    for (const auto& w : words) {
      if (!w.is_string()) throw Error(ErrorKind::lexicon, "lexicon keywords must be strings");
      list.push_back(w.get<std::string>());
    }
  }
  return lexicon;
}

void write_lexicon(std::ostream& out, const Lexicon& lexicon) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [subgroup, words] : lexicon) j[subgroup] = words;
  out << j.dump(2) << '\n';
}

std::string lexicon_refine(std::string_view query, std::string_view subgroup,
                           const Lexicon& lexicon) {
  auto it = lexicon.find(subgroup);
  if (it == lexicon.end() || it->second.empty())
    throw Error(ErrorKind::lexicon, "no keywords for subgroup '" + std::string(subgroup) + "'");
  const auto query_tokens = tokenize(query);
  for (const auto& keyword : it->second) {
    const auto phrase = tokenize(keyword);
    if (phrase.empty() || contains_phrase(query_tokens, phrase)) continue;
    std::string refined(query);
    if (!refined.empty()) refined += ' ';
    refined += keyword;
    return refined;
  }
  return std::string(query);
}

Refinement LexiconRefiner::refine(const RefinementRequest& request) {
  return {lexicon_refine(request.query, request.subgroup, lexicon_), std::nullopt};
}

}  // namespace fairqr
