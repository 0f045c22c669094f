#include "mir/prompts.hpp"

#include <cstdlib>
#include <stdexcept>

#include "mir/util.hpp"

namespace mir {

std::string PromptLibrary::default_prompt_dir() {
    if (const char* env = std::getenv("MIR_PROMPT_DIR")) return env;
#ifdef MIR_ASSET_DIR
    return std::string(MIR_ASSET_DIR) + "/prompts";
#else
    return "assets/prompts";
#endif
}

PromptLibrary PromptLibrary::load(const std::string& dir) {
    PromptLibrary lib;
    lib.pointwise = read_file(dir + "/pointwise.txt");
    lib.agent_proposal_analysis = read_file(dir + "/agent_proposal_analysis.txt");
    lib.agent_paper_analysis = read_file(dir + "/agent_paper_analysis.txt");
    lib.agent_relevance_judgment = read_file(dir + "/agent_relevance_judgment.txt");
    return lib;
}

std::string fill_slots(const std::string& template_text,
                       const std::map<std::string, std::string>& slots) {
    std::string out;
    out.reserve(template_text.size());
    std::size_t pos = 0;
    while (pos < template_text.size()) {
        const std::size_t open = template_text.find('{', pos);
        if (open == std::string::npos) {
            out.append(template_text, pos, std::string::npos);
            break;
        }
        out.append(template_text, pos, open - pos);
        const std::size_t close = template_text.find('}', open + 1);
        if (close == std::string::npos) {
            out.append(template_text, open, std::string::npos);
            break;
        }
        const std::string name = template_text.substr(open + 1, close - open - 1);
        auto it = slots.find(name);
        if (it != slots.end()) {
            out += it->second;
            pos = close + 1;
        } else {
            out.push_back('{');
            pos = open + 1;
        }
    }
    return out;
}

std::string strip_exemplar_block(const std::string& template_text) {
    static const std::string header = "Exemplars";
    static const std::string tail = "you will be evaluating.";
    const std::size_t start = template_text.find("\n" + header + "\n");
    if (start == std::string::npos) return template_text;
    const std::size_t tail_pos = template_text.find(tail, start);
    if (tail_pos == std::string::npos) return template_text;
    std::size_t end = template_text.find('\n', tail_pos);
    if (end == std::string::npos) end = template_text.size();
    std::string out = template_text.substr(0, start);
    out += template_text.substr(end);
    return out;
}

}  // namespace mir
