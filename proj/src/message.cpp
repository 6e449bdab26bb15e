#include "evi/gateway/message.hpp"

namespace evi {

const char* to_string(ChatRole role) {
    switch (role) {
        case ChatRole::system: return "system";
        case ChatRole::user: return "user";
        case ChatRole::assistant: return "assistant";
        case ChatRole::tool: return "tool";
    }
    return "user";
}

}  // namespace evi
