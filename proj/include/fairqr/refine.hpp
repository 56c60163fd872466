#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairqr/corpus.hpp"
#include "fairqr/error.hpp"
#include "fairqr/fairness.hpp"
#include "fairqr/index.hpp"

namespace fairqr {

struct RefinerConfig {
  std::size_t max_iterations = 5;
  std::size_t pool_size = 20;
  std::size_t k = 20;
  double temperature = 0.3;
  std::string category = "gender";
  Weighting weighting = Weighting::uniform;

  /// Throws ErrorKind::input on violated bounds.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Prompting

/// Placeholders every template must carry.
inline constexpr std::string_view kPromptPlaceholders[] = {
    "{Query}", "{Target Exposure Distribution}", "{Current Exposure Distribution}",
    "{Top_K}", "{subgroup}"};

inline constexpr std::string_view kRefinedQueryMarker = "REFINED_QUERY:";

std::string_view default_prompt_template();

/// "{male: 0.7000, female: 0.3000, Unknown: 0.0000}"
std::string render_distribution(const ExposureDistribution& dist,
                                const GroupSchema& schema);

/// Substitutes every placeholder and appends the output-format instruction
/// unless the template already mentions the marker.
std::string render_prompt(std::string_view prompt_template, std::string_view query,
                          const GroupSchema& schema,
                          const ExposureDistribution& target,
                          const ExposureDistribution& current, std::size_t top_k,
                          std::string_view subgroup);

/// Trimmed text after the last REFINED_QUERY: marker. Throws ParseError when
/// the marker is missing or followed by nothing.
std::string parse_refinement(std::string_view response, std::string_view fallback_query);

// ---------------------------------------------------------------------------
// Refiners

struct RefinementRequest {
  std::string_view query;
  const GroupSchema& schema;
  const ExposureDistribution& target;
  const ExposureDistribution& current;
  std::size_t top_k;
  std::string_view subgroup;
};

struct Refinement {
  std::string query;
  std::optional<std::string> raw_response;
};

/// Produces a refined query aimed at raising one subgroup's exposure.
class Refiner {
 public:
  virtual ~Refiner() = default;
  virtual Refinement refine(const RefinementRequest& request) = 0;
  /// False for refiners whose output may vary between identical calls.
  virtual bool deterministic() const = 0;
  virtual std::string_view name() const = 0;
};

using Lexicon = std::map<std::string, std::vector<std::string>, std::less<>>;

/// JSON object: subgroup -> keyword list.
Lexicon read_lexicon(std::istream& in);
void write_lexicon(std::ostream& out, const Lexicon& lexicon);

/// Appends the subgroup's first keyword not already in the query.
std::string lexicon_refine(std::string_view query, std::string_view subgroup,
                           const Lexicon& lexicon);

class LexiconRefiner final : public Refiner {
 public:
  explicit LexiconRefiner(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}
  Refinement refine(const RefinementRequest& request) override;
  bool deterministic() const override { return true; }
  std::string_view name() const override { return "lexicon"; }

 private:
  Lexicon lexicon_;
};

// ---------------------------------------------------------------------------
// Chat-completion client

/// One POST of a JSON body; returns the response body. Throws
/// Error(ErrorKind::refiner) on transport or HTTP failure. Implementations
/// must tolerate concurrent calls.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string post(const std::string& path, const std::string& body) = 0;
};

/// cpp-httplib backed transport. `base_url` is scheme://host[:port].
class HttpChatTransport final : public ChatTransport {
 public:
  HttpChatTransport(std::string base_url, std::string api_key,
                    int timeout_seconds = 60);
  std::string post(const std::string& path, const std::string& body) override;

 private:
  std::string base_url_;
  std::string api_key_;
  int timeout_seconds_;
};

struct ChatSettings {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string api_key_env = "OPENAI_API_KEY";
  int retries = 2;
};

class ChatClient {
 public:
  ChatClient(std::shared_ptr<ChatTransport> transport, ChatSettings settings);

  /// Single-user-message completion; retries transport failures up to
  /// `settings.retries` times, then rethrows.
  std::string complete(std::string_view prompt, double temperature);

  const ChatSettings& settings() const noexcept { return settings_; }

 private:
  std::shared_ptr<ChatTransport> transport_;
  ChatSettings settings_;
};

/// Request body in the chat-completion wire format.
std::string chat_request_body(std::string_view model, std::string_view prompt,
                              double temperature);
/// choices[0].message.content of a chat-completion response.
std::string chat_response_content(std::string_view body);

/// render_prompt -> one completion -> parse_refinement. The raw response is
/// written to `raw_response` when given, even if parsing fails.
std::string llm_refine(ChatClient& client, const RefinerConfig& config,
                       std::string_view prompt_template, std::string_view query,
                       const GroupSchema& schema, const ExposureDistribution& target,
                       const ExposureDistribution& current, std::string_view subgroup,
                       std::string* raw_response = nullptr);

class LlmRefiner final : public Refiner {
 public:
  LlmRefiner(ChatClient client, RefinerConfig config,
             std::string prompt_template = std::string(default_prompt_template()))
      : client_(std::move(client)),
        config_(std::move(config)),
        template_(std::move(prompt_template)) {}

  Refinement refine(const RefinementRequest& request) override;
  bool deterministic() const override { return false; }
  std::string_view name() const override { return "llm"; }

 private:
  ChatClient client_;
  RefinerConfig config_;
  std::string template_;
};

// ---------------------------------------------------------------------------
// The refinement loop

enum class TerminalReason { no_decrease, max_iterations, target_met };

std::string_view to_string(TerminalReason reason);

struct IterationRecord {
  std::size_t iteration = 0;  // 0 = original query
  std::string query;
  std::vector<double> exposure;  // empty when retrieval returned nothing
  double divergence = 0.0;       // +inf when exposure is undefined
  std::optional<std::string> subgroup;  // group targeted to produce `query`
  bool accepted = false;
  std::optional<std::string> raw_response;
  std::optional<std::string> error;
  std::optional<ErrorKind> error_kind;

  bool operator==(const IterationRecord&) const = default;
};

struct RefinementTrace {
  std::string query_id;
  std::string category;
  std::string refiner;
  std::vector<IterationRecord> iterations;
  TerminalReason reason = TerminalReason::no_decrease;
  std::size_t best_iteration = 0;

  const IterationRecord& best() const { return iterations.at(best_iteration); }
  /// True when some iteration failed inside the refiner (transport or parse).
  bool refiner_failed() const;

  bool operator==(const RefinementTrace&) const = default;
};

std::string trace_to_json(const RefinementTrace& trace);
RefinementTrace trace_from_json(std::string_view json);

struct FairQrResult {
  RankedList documents;  // retrieval set of the best accepted query
  RefinementTrace trace;
};

/// Divergence-controlled query refinement. Refiner failures and empty
/// retrievals end the loop with reason no_decrease and the best set so far.
FairQrResult fair_qr(const InvertedIndex& index, const CorpusStore& store,
                     std::string_view query, const FairnessTarget& target,
                     const RefinerConfig& config, Refiner& refiner,
                     std::string query_id = {});

}  // namespace fairqr
