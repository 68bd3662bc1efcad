#include "sizerforge/llm.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "sizerforge/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sizerforge {

namespace {

std::string env_or_throw(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') throw Error(ErrorCode::LlmConfig, std::string("environment variable ") + name + " is not set");
  return v;
}

json params_json(const GenerationParams& p) {
  return {{"temperature", p.temperature}, {"top_p", p.top_p}, {"top_k", p.top_k}, {"max_tokens", p.max_tokens}};
}

GenerationParams params_from(const json& j) {
  GenerationParams p;
  p.temperature = j.value("temperature", p.temperature);
  p.top_p = j.value("top_p", p.top_p);
  p.top_k = j.value("top_k", p.top_k);
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  return p;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// split "https://host:port/path" into ("https://host:port", "/path")
std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::LlmConfig, "endpoint is not a URL: " + url);
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

HttpResponse httplib_post(const std::string& url, const std::map<std::string, std::string>& headers,
                          const std::string& body, std::chrono::seconds timeout) {
  auto [host, path] = split_url(url);
  httplib::Client cli(host);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = cli.Post(path, h, body, "application/json");
  HttpResponse out;
  if (!res) {
    out.transport_error = httplib::to_string(res.error());
    if (res.error() == httplib::Error::Read || res.error() == httplib::Error::Write ||
        res.error() == httplib::Error::ConnectionTimeout)
      out.transport_error = "timeout: " + out.transport_error;
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  return out;
}

}  // namespace

LlmEndpoint endpoint_from_env() {
  LlmEndpoint e;
  e.url = env_or_throw("SIZERFORGE_LLM_ENDPOINT");
  e.api_key = env_or_throw("SIZERFORGE_LLM_API_KEY");
  const char* model = std::getenv("SIZERFORGE_LLM_MODEL");
  e.model = (model != nullptr && *model != '\0') ? model : "default";
  return e;
}

std::string chat_request_body(const LlmEndpoint& endpoint, const LlmRequest& request) {
  json body = params_json(request.params);
  body["model"] = endpoint.model;
  body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});
  return body.dump();
}

std::string chat_response_text(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::LlmTransport, "response body is not JSON");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::LlmTransport, "response has no choices[0].message.content");
  }
}

HttpLlmClient::HttpLlmClient(LlmEndpoint endpoint, HttpPost post) : endpoint_(std::move(endpoint)), post_(std::move(post)) {
  if (endpoint_.url.empty()) throw Error(ErrorCode::LlmConfig, "LLM endpoint is empty");
  if (endpoint_.api_key.empty()) throw Error(ErrorCode::LlmConfig, "LLM API key is empty");
  if (!post_) {
    auto timeout = endpoint_.timeout;
    post_ = [timeout](const std::string& url, const std::map<std::string, std::string>& headers, const std::string& body) {
      return httplib_post(url, headers, body, timeout);
    };
  }
}

std::string HttpLlmClient::complete(const LlmRequest& request) {
  const std::string body = chat_request_body(endpoint_, request);
  const std::map<std::string, std::string> headers{{"Authorization", "Bearer " + endpoint_.api_key}};
  std::string last;
  bool timed_out = false;
  for (int attempt = 0; attempt <= endpoint_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(endpoint_.backoff * (1 << (attempt - 1)));
    HttpResponse r = post_(endpoint_.url, headers, body);
    if (!r.transport_error.empty()) {
      last = r.transport_error;
      timed_out = r.transport_error.rfind("timeout", 0) == 0;
    } else if (r.status == 429 || r.status >= 500) {
      last = "HTTP " + std::to_string(r.status);
      timed_out = false;
    } else if (r.status >= 400) {
      throw Error(ErrorCode::LlmTransport, "HTTP " + std::to_string(r.status) + ": " + r.body.substr(0, 200));
    } else {
      return chat_response_text(r.body);
    }
    spdlog::debug("llm attempt {} failed: {}", attempt + 1, last);
  }
  throw Error(timed_out ? ErrorCode::LlmTimeout : ErrorCode::LlmTransport,
              "LLM request failed after " + std::to_string(endpoint_.retries + 1) + " attempts: " + last);
}

std::string transcript_to_json(const Transcript& t) {
  json j{{"kind", t.kind}, {"prompt", t.prompt}, {"params", params_json(t.params)}, {"response", t.response}};
  return j.dump(2) + "\n";
}

Transcript transcript_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::IoError, "transcript is not a JSON object");
  Transcript t;
  t.kind = j.value("kind", "");
  t.prompt = j.value("prompt", "");
  if (j.contains("params")) t.params = params_from(j["params"]);
  t.response = j.value("response", "");
  return t;
}

ReplayLlmClient::ReplayLlmClient(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::LlmConfig, "replay directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    Transcript t = transcript_from_json(read_file(f));
    queues_[t.kind].push_back(std::move(t));
  }
}

std::string ReplayLlmClient::complete(const LlmRequest& request) {
  auto it = queues_.find(request.kind);
  if (it == queues_.end() || it->second.empty())
    throw Error(ErrorCode::LlmTransport, "replay has no transcript left for '" + request.kind + "'");
  std::string out = std::move(it->second.front().response);
  it->second.pop_front();
  return out;
}

RecordingLlmClient::RecordingLlmClient(std::shared_ptr<LlmClient> inner, std::string dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

std::string RecordingLlmClient::complete(const LlmRequest& request) {
  std::string response = inner_->complete(request);
  std::lock_guard lock(mutex_);
  char name[64];
  std::snprintf(name, sizeof name, "%04d_%s.json", counter_++, request.kind.c_str());
  std::ofstream out(fs::path(dir_) / name, std::ios::binary);
  out << transcript_to_json({request.kind, request.prompt, request.params, response});
  return response;
}

std::shared_ptr<LlmClient> make_llm_client(const std::string& backend, const std::string& transcript_dir) {
  if (backend == "rule") return nullptr;
  if (backend.rfind("replay:", 0) == 0) return std::make_shared<ReplayLlmClient>(backend.substr(7));
  if (backend != "llm") throw Error(ErrorCode::LlmConfig, "unknown backend '" + backend + "' (rule | llm | replay:DIR)");
  std::shared_ptr<LlmClient> client = std::make_shared<HttpLlmClient>(endpoint_from_env());
  if (!transcript_dir.empty()) client = std::make_shared<RecordingLlmClient>(client, transcript_dir);
  return client;
}

}  // namespace sizerforge
