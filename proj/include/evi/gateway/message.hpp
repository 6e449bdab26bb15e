#pragma once

#include <optional>
#include <string>
#include <vector>

namespace evi {

enum class ChatRole { system, user, assistant, tool };

const char* to_string(ChatRole role);

struct ChatMessage {
    ChatRole role = ChatRole::user;
    std::string text;
    std::vector<std::string> attachments;  // image references; only user messages carry them
    std::optional<int> call_id;            // required when role == tool

    bool operator==(const ChatMessage&) const = default;
};

inline ChatMessage system_message(std::string text) {
    return ChatMessage{ChatRole::system, std::move(text), {}, std::nullopt};
}

inline ChatMessage user_message(std::string text, std::vector<std::string> attachments = {}) {
    return ChatMessage{ChatRole::user, std::move(text), std::move(attachments), std::nullopt};
}

inline ChatMessage assistant_message(std::string text) {
    return ChatMessage{ChatRole::assistant, std::move(text), {}, std::nullopt};
}

}  // namespace evi
