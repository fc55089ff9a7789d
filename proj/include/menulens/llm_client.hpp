#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <vector>

namespace menulens {

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;
};

/// Anything that turns a message list into one reply. Implementations throw
/// Error(kLlmUnavailable) when the model cannot be reached and
/// Error(kLlmRejected) when it refuses the request.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

struct LlmClientConfig {
  /// Full URL of a chat-completion endpoint, e.g.
  /// https://api.openai.com/v1/chat/completions.
  std::string endpoint;
  std::string model = "gpt-4";
  /// Name of the environment variable holding the bearer token. The token
  /// itself is never stored in configuration.
  std::string token_env_var;
  double timeout_seconds = 60.0;
  int max_retries = 2;
  /// First retry waits this long; each further retry doubles it.
  double backoff_seconds = 1.0;

  /// Throws kInvalidArgument unless timeout > 0, retries >= 0, endpoint set.
  void validate() const;
};

struct LlmCallStats {
  int attempts = 0;
  int retries = 0;
  int last_status = 0;
};

/// Chat-completion client over HTTP(S). Retries on timeouts, connection
/// failures, 429 and 5xx; fails fast on other 4xx.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(LlmClientConfig config);

  std::string complete(const std::vector<ChatMessage>& messages) override;

  const LlmCallStats& last_call() const { return stats_; }

  /// Replaces the sleep used between retries (tests).
  void set_sleeper(std::function<void(std::chrono::duration<double>)> sleeper) {
    sleeper_ = std::move(sleeper);
  }

 private:
  LlmClientConfig config_;
  LlmCallStats stats_;
  std::function<void(std::chrono::duration<double>)> sleeper_;
};

/// System instruction used for recommendation prompts.
extern const char* const kAssistantSystemPrompt;

/// Sends [system, user=prompt] and returns the first choice's message text.
std::string llm_complete(const std::string& prompt, const LlmClientConfig& config,
                         LlmCallStats* stats = nullptr);

/// Reads MENULENS_LLM_TOKEN_VAR for the token variable name when the config
/// does not name one.
std::string resolve_token_env_var(const LlmClientConfig& config);

}  // namespace menulens
