#include "evi/gateway/backend.hpp"

#include <fstream>

#include "httplib.h"

#include "evi/errors.hpp"
#include "evi/jsonutil.hpp"

namespace evi {

namespace {

// Splits "http://host:port/path" into client target and path.
struct UrlParts {
    std::string host_port;  // scheme://host:port
    std::string path;       // /path (at least "/")
};

UrlParts split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw BackendUnavailable("endpoint is not a valid URL: " + url);
    auto path_begin = url.find('/', scheme_end + 3);
    if (path_begin == std::string::npos) return {url, "/"};
    return {url.substr(0, path_begin), url.substr(path_begin)};
}

std::string base64_encode(const std::string& bytes) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 2 < bytes.size()) {
        unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                     (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                     static_cast<unsigned char>(bytes[i + 2]);
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += alphabet[(v >> 6) & 63];
        out += alphabet[v & 63];
        i += 3;
    }
    if (i + 1 == bytes.size()) {
        unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == bytes.size()) {
        unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                     (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += alphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

}  // namespace

std::string unescape_script_line(const std::string& line) {
    std::string out;
    out.reserve(line.size());
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\\' && i + 1 < line.size()) {
            char next = line[i + 1];
            if (next == 'n') {
                out += '\n';
                ++i;
                continue;
            }
            if (next == '\\') {
                out += '\\';
                ++i;
                continue;
            }
        }
        out += line[i];
    }
    return out;
}

std::string escape_script_line(const std::string& emission) {
    std::string out;
    out.reserve(emission.size());
    for (char c : emission) {
        if (c == '\\')
            out += "\\\\";
        else if (c == '\n')
            out += "\\n";
        else
            out += c;
    }
    return out;
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> emissions)
    : emissions_(std::move(emissions)) {}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BackendUnavailable("cannot open script file: " + path);
    std::vector<std::string> emissions;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        emissions.push_back(unescape_script_line(line));
    }
    return std::make_unique<ScriptedBackend>(std::move(emissions));
}

std::string ScriptedBackend::complete(const std::vector<ChatMessage>&) {
    if (next_ >= emissions_.size())
        throw ScriptExhausted("script exhausted after " + std::to_string(next_) + " emissions");
    return emissions_[next_++];
}

HttpBackend::HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {}

std::string HttpBackend::complete(const std::vector<ChatMessage>& messages) {
    Json body{
        {"model", cfg_.model},
        {"temperature", cfg_.temperature},
        {"max_tokens", cfg_.max_output_tokens},
    };
    Json msgs = Json::array();
    for (const auto& m : messages) {
        Json jm{{"role", to_string(m.role)}, {"content", m.text}};
        if (m.call_id) jm["call_id"] = *m.call_id;
        if (!m.attachments.empty()) {
            Json images = Json::array();
            for (const auto& ref : m.attachments) {
                std::ifstream img(ref, std::ios::binary);
                if (!img)
                    throw BackendUnavailable("cannot read image attachment: " + ref);
                std::string data((std::istreambuf_iterator<char>(img)),
                                 std::istreambuf_iterator<char>());
                images.push_back(base64_encode(data));
            }
            jm["images"] = std::move(images);
        }
        msgs.push_back(std::move(jm));
    }
    body["messages"] = std::move(msgs);

    UrlParts url = split_url(cfg_.endpoint);
    httplib::Client client(url.host_port);
    client.set_connection_timeout(0, cfg_.timeout_ms * 1000LL);
    client.set_read_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);
    client.set_write_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);

    auto res = client.Post(url.path, body.dump(), "application/json");
    if (!res) {
        if (res.error() == httplib::Error::ConnectionTimeout)
            throw BackendTimeout("connect to " + cfg_.endpoint + " timed out");
        throw BackendUnavailable("request to " + cfg_.endpoint + " failed: " +
                                 httplib::to_string(res.error()));
    }
    if (res->status != 200)
        throw BackendUnavailable("backend returned HTTP " + std::to_string(res->status) + ": " +
                                 res->body);
    Json reply = parse_lenient(res->body);
    if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty() || !reply["choices"][0].contains("message") ||
        !reply["choices"][0]["message"].contains("content") ||
        !reply["choices"][0]["message"]["content"].is_string())
        throw BackendUnavailable("backend response is not a chat completion: " + res->body);
    return reply["choices"][0]["message"]["content"].get<std::string>();
}

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg) {
    bool has_endpoint = !cfg.endpoint.empty();
    bool has_script = !cfg.script_path.empty();
    if (has_endpoint == has_script)
        throw PreconditionError("backend config must set exactly one of endpoint / script_path");
    if (has_script) return ScriptedBackend::from_file(cfg.script_path);
    return std::make_unique<HttpBackend>(cfg);
}

Gateway::Gateway(std::unique_ptr<Backend> backend) : backend_(std::move(backend)) {
    if (!backend_) throw PreconditionError("gateway requires a backend");
}

std::string Gateway::complete(const std::vector<ChatMessage>& messages) {
    if (messages.empty()) throw PreconditionError("message list must be non-empty");
    if (messages.front().role != ChatRole::system)
        throw PreconditionError("first message must be a system message");
    return backend_->complete(messages);
}

}  // namespace evi
