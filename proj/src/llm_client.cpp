#include "menulens/llm_client.hpp"

#include <httplib.h>

#include <cstdlib>
#include <regex>
#include <thread>

#include <nlohmann/json.hpp>

#include "menulens/error.hpp"

namespace menulens {

const char* const kAssistantSystemPrompt =
    "You are a reading assistant for a blind or visually impaired diner. You are given "
    "a restaurant menu as JSON, notes about the user's personal food history, hard "
    "dietary exclusions and the conversation so far. Answer the user's question in "
    "plain language suitable for text-to-speech. Never suggest an item that contains an "
    "excluded ingredient. Mention prices when recommending dishes.";

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw Error(ErrorCode::kInvalidArgument, "unsupported LLM endpoint URL: " + url);
  }
  return {m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 300;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

}  // namespace

void LlmClientConfig::validate() const {
  if (endpoint.empty()) throw Error(ErrorCode::kInvalidArgument, "LLM endpoint is not set");
  if (!(timeout_seconds > 0)) throw Error(ErrorCode::kInvalidArgument, "LLM timeout must be > 0");
  if (max_retries < 0) throw Error(ErrorCode::kInvalidArgument, "LLM max_retries must be >= 0");
  if (backoff_seconds < 0) throw Error(ErrorCode::kInvalidArgument, "LLM backoff must be >= 0");
}

std::string resolve_token_env_var(const LlmClientConfig& config) {
  if (!config.token_env_var.empty()) return config.token_env_var;
  if (const char* var = std::getenv("MENULENS_LLM_TOKEN_VAR"); var != nullptr) return var;
  return {};
}

HttpChatClient::HttpChatClient(LlmClientConfig config)
    : config_(std::move(config)),
      sleeper_([](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); }) {
  config_.validate();
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) {
  const ParsedUrl url = parse_url(config_.endpoint);
  nlohmann::json payload{{"model", config_.model}, {"messages", nlohmann::json::array()}};
  for (const auto& m : messages) {
    payload["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  const std::string body = payload.dump();

  httplib::Headers headers;
  if (const std::string var = resolve_token_env_var(config_); !var.empty()) {
    if (const char* token = std::getenv(var.c_str()); token != nullptr && *token != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }

  httplib::Client client(url.origin);
  const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  client.set_connection_timeout(usec);
  client.set_read_timeout(usec);
  client.set_write_timeout(usec);

  stats_ = {};
  std::string last_failure;
  double backoff = config_.backoff_seconds;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      sleeper_(std::chrono::duration<double>(backoff));
      backoff *= 2;
      ++stats_.retries;
    }
    ++stats_.attempts;
    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
      stats_.last_status = 0;
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    stats_.last_status = res->status;
    if (retryable_status(res->status)) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::kLlmRejected,
                  "LLM endpoint returned HTTP " + std::to_string(res->status) + ": " +
                      excerpt(res->body));
    }
    try {
      const auto reply = nlohmann::json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::kLlmRejected,
                  "LLM endpoint returned an unexpected body: " + excerpt(res->body));
    }
  }
  throw Error(ErrorCode::kLlmUnavailable, "LLM endpoint unavailable after " +
                                              std::to_string(stats_.attempts) +
                                              " attempts (" + last_failure + ")");
}

std::string llm_complete(const std::string& prompt, const LlmClientConfig& config,
                         LlmCallStats* stats) {
  HttpChatClient client(config);
  struct Record {
    HttpChatClient& client;
    LlmCallStats* out;
    ~Record() {
      if (out != nullptr) *out = client.last_call();
    }
  } record{client, stats};
  return client.complete({{"system", kAssistantSystemPrompt}, {"user", prompt}});
}

}  // namespace menulens
