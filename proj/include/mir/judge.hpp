#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mir/util.hpp"

namespace mir {

struct JudgeMessage {
    std::string role;  // system | user
    std::string text;
};

struct JudgeRequest {
    std::string model_id;
    std::vector<JudgeMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
};

struct JudgeResponse {
    std::string text;
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct JudgeTransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class JudgeClient {
public:
    virtual ~JudgeClient() = default;
    // Throws JudgeTransportError on transport failure.
    virtual JudgeResponse complete(const JudgeRequest& request) = 0;
};

// POSTs the request JSON to <endpoint>/complete and expects
// {"text", "prompt_tokens", "completion_tokens"} back. The API key, when
// present in the environment, travels as a bearer token.
class HttpJudgeClient : public JudgeClient {
public:
    explicit HttpJudgeClient(std::string endpoint,
                             std::string api_key_env = "MIR_JUDGE_API_KEY");
    JudgeResponse complete(const JudgeRequest& request) override;

private:
    std::string endpoint_;
    std::string api_key_;
};

json judge_request_to_json(const JudgeRequest& request);

// Content-addressed key for a judge call.
std::string cache_key(const std::string& model_id, const std::string& full_prompt_text,
                      double temperature, const std::string& input_mode);

// One file per key under a cache directory. Values for a given key are
// identical by construction; concurrent writers may race benignly.
class TranscriptCache {
public:
    explicit TranscriptCache(std::string dir);
    std::optional<json> get(const std::string& key) const;
    void put(const std::string& key, const json& transcript) const;
    const std::string& dir() const { return dir_; }

private:
    std::string path_for(const std::string& key) const;
    std::string dir_;
};

struct RetryPolicy {
    int max_retries = 3;    // additional attempts after the first
    int base_backoff_ms = 200;  // doubles per retry
};

struct ResolvedCall {
    std::string key;
    std::string text;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    bool from_cache = false;
    bool transport_failed = false;  // every attempt failed; text is empty
    int attempts = 0;
};

// Cache-first resolution of one judge call. On a miss the backend is tried
// with exponential backoff; the final outcome, failed or not, is cached so
// reruns replay without touching the backend.
ResolvedCall resolve_call(JudgeClient& client, const TranscriptCache* cache,
                          const JudgeRequest& request, const std::string& input_mode,
                          const RetryPolicy& policy,
                          const std::function<bool(const std::string&)>& acceptable);

}  // namespace mir
