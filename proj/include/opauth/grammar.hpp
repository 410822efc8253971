#pragma once

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "opauth/errors.hpp"
#include "opauth/textio.hpp"

namespace opauth {

// Directed graph over gesture ids constraining which gesture may follow
// which. Gestures, edges and the start set are kept sorted so serialization
// is canonical.
class GrammarGraph {
public:
    GrammarGraph(std::vector<std::string> gestures, std::vector<std::pair<std::string, std::string>> edges,
                 std::vector<std::string> start_set)
        : gestures_(std::move(gestures)), edges_(std::move(edges)), start_set_(std::move(start_set)) {
        normalize();
        if (start_set_.empty()) throw ConfigError("grammar: start set is empty");
        for (const auto& g : start_set_)
            if (!has_gesture(g)) throw ConfigError("grammar: start gesture '" + g + "' is not declared");
        for (const auto& [from, to] : edges_) {
            if (!has_gesture(from)) throw ConfigError("grammar: edge endpoint '" + from + "' is not declared");
            if (!has_gesture(to)) throw ConfigError("grammar: edge endpoint '" + to + "' is not declared");
        }
    }

    const std::vector<std::string>& gestures() const { return gestures_; }
    const std::vector<std::pair<std::string, std::string>>& edges() const { return edges_; }
    const std::vector<std::string>& start_set() const { return start_set_; }

    bool has_gesture(const std::string& id) const {
        return std::binary_search(gestures_.begin(), gestures_.end(), id);
    }

    std::vector<std::string> successors(const std::string& from) const {
        std::vector<std::string> out;
        for (const auto& [a, b] : edges_)
            if (a == from) out.push_back(b);
        return out;
    }

    bool operator==(const GrammarGraph& other) const = default;

private:
    void normalize() {
        auto dedup_sort = [](auto& v) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        };
        dedup_sort(gestures_);
        dedup_sort(edges_);
        dedup_sort(start_set_);
    }

    std::vector<std::string> gestures_;
    std::vector<std::pair<std::string, std::string>> edges_;
    std::vector<std::string> start_set_;
};

// Three-gesture cycle used by the synthetic teleoperation task:
// G1 -> G2 -> G3 -> G1, starting at G1.
inline GrammarGraph cycle_grammar(const std::vector<std::string>& gestures) {
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t i = 0; i < gestures.size(); ++i)
        edges.emplace_back(gestures[i], gestures[(i + 1) % gestures.size()]);
    return GrammarGraph(gestures, std::move(edges), {gestures.front()});
}

// Text format: a "start: A,B" header line followed by one "FROM -> TO" line
// per directed edge. The gesture set is the union of all mentioned ids.
inline std::string serialize_grammar(const GrammarGraph& grammar) {
    std::ostringstream out;
    out << "start: ";
    const auto& start = grammar.start_set();
    for (std::size_t i = 0; i < start.size(); ++i) out << (i ? "," : "") << start[i];
    out << "\n";
    for (const auto& [from, to] : grammar.edges()) out << from << " -> " << to << "\n";
    return out.str();
}

inline GrammarGraph parse_grammar(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> start;
    std::vector<std::pair<std::string, std::string>> edges;
    std::set<std::string> gestures;
    bool saw_start = false;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        if (body.rfind("start:", 0) == 0) {
            if (saw_start) throw ConfigError("grammar line " + std::to_string(line_no) + ": duplicate start line");
            saw_start = true;
            for (const auto& tok : split(body.substr(6), ',')) {
                const std::string id(trim(tok));
                if (id.empty()) throw ConfigError("grammar line " + std::to_string(line_no) + ": empty start id");
                start.push_back(id);
                gestures.insert(id);
            }
            continue;
        }
        const std::size_t arrow = body.find("->");
        if (arrow == std::string_view::npos)
            throw ConfigError("grammar line " + std::to_string(line_no) + ": expected 'FROM -> TO'");
        const std::string from(trim(body.substr(0, arrow)));
        const std::string to(trim(body.substr(arrow + 2)));
        if (from.empty() || to.empty())
            throw ConfigError("grammar line " + std::to_string(line_no) + ": empty gesture id");
        edges.emplace_back(from, to);
        gestures.insert(from);
        gestures.insert(to);
    }
    if (!saw_start) throw ConfigError("grammar: missing 'start:' line");
    return GrammarGraph(std::vector<std::string>(gestures.begin(), gestures.end()), std::move(edges),
                        std::move(start));
}

inline void save_grammar_file(const GrammarGraph& grammar, const std::filesystem::path& path) {
    write_text_file_atomic(path, serialize_grammar(grammar));
}

inline GrammarGraph load_grammar_file(const std::filesystem::path& path) {
    return parse_grammar(read_text_file(path));
}

}  // namespace opauth
