#include "mir/judge.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <thread>

namespace mir {

HttpJudgeClient::HttpJudgeClient(std::string endpoint, std::string api_key_env)
    : endpoint_(std::move(endpoint)) {
    if (const char* key = std::getenv(api_key_env.c_str())) api_key_ = key;
}

json judge_request_to_json(const JudgeRequest& request) {
    json messages = json::array();
    for (const JudgeMessage& m : request.messages) {
        messages.push_back(json{{"role", m.role}, {"text", m.text}});
    }
    return json{{"model_id", request.model_id},
                {"messages", messages},
                {"temperature", request.temperature},
                {"max_tokens", request.max_tokens}};
}

JudgeResponse HttpJudgeClient::complete(const JudgeRequest& request) {
    httplib::Client client(endpoint_);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const std::string body = judge_request_to_json(request).dump();
    auto res = client.Post("/complete", headers, body, "application/json");
    if (!res) {
        throw JudgeTransportError("judge endpoint unreachable: " + endpoint_);
    }
    if (res->status != 200) {
        throw JudgeTransportError("judge endpoint returned status " + std::to_string(res->status));
    }
    json payload = json::parse(res->body, nullptr, false);
    if (payload.is_discarded() || !payload.contains("text") || !payload["text"].is_string()) {
        throw JudgeTransportError("judge endpoint returned a malformed payload");
    }
    JudgeResponse out;
    out.text = payload["text"].get<std::string>();
    out.prompt_tokens = payload.value("prompt_tokens", 0L);
    out.completion_tokens = payload.value("completion_tokens", 0L);
    return out;
}

std::string cache_key(const std::string& model_id, const std::string& full_prompt_text,
                      double temperature, const std::string& input_mode) {
    std::string material;
    material += model_id;
    material.push_back('\0');
    material += full_prompt_text;
    material.push_back('\0');
    char temp[64];
    std::snprintf(temp, sizeof(temp), "%.17g", temperature);
    material += temp;
    material.push_back('\0');
    material += input_mode;
    return sha256_hex(material);
}

TranscriptCache::TranscriptCache(std::string dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::string TranscriptCache::path_for(const std::string& key) const { return dir_ + "/" + key + ".json"; }

std::optional<json> TranscriptCache::get(const std::string& key) const {
    const std::string path = path_for(key);
    if (!std::filesystem::exists(path)) return std::nullopt;
    json obj = json::parse(read_file(path), nullptr, false);
    if (obj.is_discarded()) return std::nullopt;
    return obj;
}

void TranscriptCache::put(const std::string& key, const json& transcript) const {
    write_file_atomic(path_for(key), transcript.dump(2));
}

ResolvedCall resolve_call(JudgeClient& client, const TranscriptCache* cache,
                          const JudgeRequest& request, const std::string& input_mode,
                          const RetryPolicy& policy,
                          const std::function<bool(const std::string&)>& acceptable) {
    std::string prompt_text;
    for (const JudgeMessage& m : request.messages) {
        prompt_text += m.role;
        prompt_text.push_back('\n');
        prompt_text += m.text;
        prompt_text.push_back('\n');
    }
    ResolvedCall result;
    result.key = cache_key(request.model_id, prompt_text, request.temperature, input_mode);

    if (cache) {
        if (auto cached = cache->get(result.key)) {
            result.text = cached->value("text", "");
            result.prompt_tokens = cached->value("prompt_tokens", 0L);
            result.completion_tokens = cached->value("completion_tokens", 0L);
            result.transport_failed = cached->value("transport_failed", false);
            result.from_cache = true;
            return result;
        }
    }

    const int max_attempts = 1 + policy.max_retries;
    int backoff = policy.base_backoff_ms;
    std::string last_text;
    long prompt_tokens = 0, completion_tokens = 0;
    bool got_response = false;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        ++result.attempts;
        try {
            const JudgeResponse resp = client.complete(request);
            got_response = true;
            last_text = resp.text;
            prompt_tokens += resp.prompt_tokens;
            completion_tokens += resp.completion_tokens;
            if (acceptable(resp.text)) break;
        } catch (const JudgeTransportError&) {
            // fall through to backoff
        }
        if (attempt + 1 < max_attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
    }

    result.text = last_text;
    result.prompt_tokens = prompt_tokens;
    result.completion_tokens = completion_tokens;
    result.transport_failed = !got_response;

    if (cache) {
        cache->put(result.key, json{{"model_id", request.model_id},
                                    {"input_mode", input_mode},
                                    {"temperature", request.temperature},
                                    {"request", judge_request_to_json(request)},
                                    {"text", result.text},
                                    {"prompt_tokens", result.prompt_tokens},
                                    {"completion_tokens", result.completion_tokens},
                                    {"transport_failed", result.transport_failed},
                                    {"attempts", result.attempts}});
    }
    return result;
}

}  // namespace mir
