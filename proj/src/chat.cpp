#include <httplib.h>
#include <json.hpp>

#include "fairqr/refine.hpp"

namespace fairqr {

HttpChatTransport::HttpChatTransport(std::string base_url, std::string api_key,
                                     int timeout_seconds)
    : base_url_(std::move(base_url)),
      api_key_(std::move(api_key)),
      timeout_seconds_(timeout_seconds) {}

std::string HttpChatTransport::post(const std::string& path, const std::string& body) {
  // A fresh client per call keeps the transport safe under concurrent use.
  httplib::Client client(base_url_);
  if (!client.is_valid())
    throw Error(ErrorKind::refiner, "cannot open a client for " + base_url_);
  client.set_connection_timeout(timeout_seconds_, 0);
  client.set_read_timeout(timeout_seconds_, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto res = client.Post(path, headers, body, "application/json");
  if (!res)
    throw Error(ErrorKind::refiner, "POST " + base_url_ + path + " failed: " +
                                        httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw Error(ErrorKind::refiner, "POST " + base_url_ + path + " returned HTTP " +
                                        std::to_string(res->status));
  return res->body;
}

ChatClient::ChatClient(std::shared_ptr<ChatTransport> transport, ChatSettings settings)
    : transport_(std::move(transport)), settings_(std::move(settings)) {
  if (!transport_) throw Error(ErrorKind::input, "chat client needs a transport");
  if (settings_.retries < 0) throw Error(ErrorKind::input, "retries must be nonnegative");
}

std::string chat_request_body(std::string_view model, std::string_view prompt,
                              double temperature) {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["temperature"] = temperature;
  j["messages"] = nlohmann::ordered_json::array(
      {{{"role", "user"}, {"content", prompt}}});
  return j.dump();
}

std::string chat_response_content(std::string_view body) {
  try {
    auto j = nlohmann::json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::refiner, std::string("unexpected chat response: ") + e.what());
  }
}

std::string ChatClient::complete(std::string_view prompt, double temperature) {
  const auto body = chat_request_body(settings_.model, prompt, temperature);
  for (int attempt = 0;; ++attempt) {
    try {
      return chat_response_content(transport_->post(settings_.path, body));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::refiner || attempt >= settings_.retries) throw;
    }
  }
}

std::string llm_refine(ChatClient& client, const RefinerConfig& config,
                       std::string_view prompt_template, std::string_view query,
                       const GroupSchema& schema, const ExposureDistribution& target,
                       const ExposureDistribution& current, std::string_view subgroup,
                       std::string* raw_response) {
  const auto prompt =
      render_prompt(prompt_template, query, schema, target, current, config.k, subgroup);
  auto response = client.complete(prompt, config.temperature);
  if (raw_response) *raw_response = response;
  return parse_refinement(response, query);
}

Refinement LlmRefiner::refine(const RefinementRequest& request) {
  std::string raw;
  auto refined = llm_refine(client_, config_, template_, request.query, request.schema,
                            request.target, request.current, request.subgroup, &raw);
  return {std::move(refined), std::move(raw)};
}

}  // namespace fairqr
