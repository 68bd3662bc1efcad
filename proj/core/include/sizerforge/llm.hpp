#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace sizerforge {

struct GenerationParams {
  double temperature = 0.4;
  double top_p = 0.85;
  int top_k = 20;
  int max_tokens = 8192;
};

struct LlmRequest {
  /// understand | plan | inner | outer (used to name and match transcripts).
  std::string kind;
  std::string prompt;
  GenerationParams params;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  /// Raw completion text. Throws Error{LlmTransport}, Error{LlmTimeout} or
  /// Error{LlmConfig}.
  virtual std::string complete(const LlmRequest& request) = 0;
};

struct HttpResponse {
  int status = 0;
  std::string body;
  /// Non-empty when the request never produced a status (connect, TLS...).
  std::string transport_error;
};

using HttpPost = std::function<HttpResponse(const std::string& url, const std::map<std::string, std::string>& headers,
                                            const std::string& body)>;

struct LlmEndpoint {
  std::string url;
  std::string api_key;
  std::string model;
  int retries = 2;
  std::chrono::milliseconds backoff{500};
  std::chrono::seconds timeout{120};
};

/// Reads SIZERFORGE_LLM_ENDPOINT, SIZERFORGE_LLM_API_KEY and
/// SIZERFORGE_LLM_MODEL. Throws Error{LlmConfig} naming the missing variable.
LlmEndpoint endpoint_from_env();

/// Chat-completions style JSON request body.
std::string chat_request_body(const LlmEndpoint& endpoint, const LlmRequest& request);
/// choices[0].message.content of a chat-completions response.
std::string chat_response_text(const std::string& body);

/// POSTs to an HTTP(S) endpoint; retries transport errors, 429 and 5xx with
/// exponential backoff.
class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(LlmEndpoint endpoint, HttpPost post = {});
  std::string complete(const LlmRequest& request) override;

 private:
  LlmEndpoint endpoint_;
  HttpPost post_;
};

/// Transcript file: {"kind", "prompt", "params", "response"}.
struct Transcript {
  std::string kind;
  std::string prompt;
  GenerationParams params;
  std::string response;
};

std::string transcript_to_json(const Transcript& t);
Transcript transcript_from_json(const std::string& text);

/// Serves recorded transcripts: per kind, in file-name order. Running out of
/// transcripts is a transport error (the caller then falls back).
class ReplayLlmClient final : public LlmClient {
 public:
  explicit ReplayLlmClient(const std::string& dir);
  std::string complete(const LlmRequest& request) override;

 private:
  std::map<std::string, std::deque<Transcript>> queues_;
};

/// Writes one transcript file per call (NNNN_kind.json) around another client.
class RecordingLlmClient final : public LlmClient {
 public:
  RecordingLlmClient(std::shared_ptr<LlmClient> inner, std::string dir);
  std::string complete(const LlmRequest& request) override;

 private:
  std::shared_ptr<LlmClient> inner_;
  std::string dir_;
  std::mutex mutex_;
  int counter_ = 0;
};

/// Answers with a callback; handy for scripted conversations.
class CallbackLlmClient final : public LlmClient {
 public:
  using Fn = std::function<std::string(const LlmRequest&)>;
  explicit CallbackLlmClient(Fn fn) : fn_(std::move(fn)) {}
  std::string complete(const LlmRequest& request) override { return fn_(request); }

 private:
  Fn fn_;
};

/// Client for a backend string: "rule" gives null, "llm" an HTTP client
/// configured from the environment, "replay:<dir>" a replay client. When
/// `transcript_dir` is set, live calls are recorded there.
std::shared_ptr<LlmClient> make_llm_client(const std::string& backend, const std::string& transcript_dir = {});

}  // namespace sizerforge
