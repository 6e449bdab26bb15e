#pragma once

#include <memory>
#include <string>
#include <vector>

#include "evi/gateway/message.hpp"

namespace evi {

// Exactly one of {endpoint, script_path} must be set; make_backend enforces
// it. Temperature defaults to 0 so remote runs are as deterministic as the
// server allows.
struct BackendConfig {
    std::string endpoint;     // chat-completion URL, e.g. http://host:8000/v1/chat/completions
    std::string script_path;  // file with one emission per line (\n escaped)
    std::string model;
    int timeout_ms = 30000;
    int max_output_tokens = 2048;
    double temperature = 0.0;
};

class Backend {
public:
    virtual ~Backend() = default;

    // Returns the next raw emission for this message list. Throws
    // BackendUnavailable / BackendTimeout / ScriptExhausted.
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;

    // Remote backends receive image attachments base64-encoded; local ones
    // get the raw path references.
    virtual bool wants_base64_images() const { return false; }
};

// Replays a fixed list of emissions in order, ignoring message content.
// Single-trajectory: one instance backs exactly one run.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(std::vector<std::string> emissions);

    // One emission per line; "\n" escapes embedded newlines, "\\" a backslash.
    static std::unique_ptr<ScriptedBackend> from_file(const std::string& path);

    std::string complete(const std::vector<ChatMessage>& messages) override;

    std::size_t consumed() const { return next_; }
    std::size_t remaining() const { return emissions_.size() - next_; }

private:
    std::vector<std::string> emissions_;
    std::size_t next_ = 0;
};

// Decode one script line (reverse of the file escaping).
std::string unescape_script_line(const std::string& line);
std::string escape_script_line(const std::string& emission);

// POSTs an OpenAI-style chat-completion request; see README for the exact
// field contract. Maps connection failures to BackendUnavailable and
// connect timeouts to BackendTimeout.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig cfg);

    std::string complete(const std::vector<ChatMessage>& messages) override;
    bool wants_base64_images() const override { return true; }

private:
    BackendConfig cfg_;
};

// Validates the config (exactly one transport) and builds the right backend.
std::unique_ptr<Backend> make_backend(const BackendConfig& cfg);

// Thin precondition-checking wrapper the engine talks to: message list must
// be non-empty and start with a system message.
class Gateway {
public:
    explicit Gateway(std::unique_ptr<Backend> backend);

    std::string complete(const std::vector<ChatMessage>& messages);
    Backend& backend() { return *backend_; }

private:
    std::unique_ptr<Backend> backend_;
};

}  // namespace evi
