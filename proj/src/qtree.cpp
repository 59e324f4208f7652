#include "c2kit/qtree.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <unordered_map>

namespace c2kit {

namespace {

std::string_view trim_right(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string_view trim(std::string_view s) {
    s = trim_right(s);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    return s;
}

}  // namespace

TreePath::TreePath(std::initializer_list<int> indices) {
    if (indices.size() < 1 || indices.size() > kMaxDepth) {
        throw std::invalid_argument("tree path must have 1 to 3 indices");
    }
    for (int i : indices) {
        if (i < 1 || i > kFanout) throw std::invalid_argument("tree path index out of range");
        indices_[depth_++] = static_cast<std::uint8_t>(i);
    }
}

std::optional<TreePath> TreePath::parse(std::string_view text) {
    if (!text.empty() && text.back() == '.') text.remove_suffix(1);
    if (text.empty()) return std::nullopt;

    TreePath path;
    std::size_t pos = 0;
    while (true) {
        if (path.depth_ == kMaxDepth) return std::nullopt;
        const std::size_t dot = text.find('.', pos);
        const std::string_view part = text.substr(pos, dot == std::string_view::npos ? text.npos : dot - pos);
        if (part.size() != 1 || part[0] < '1' || part[0] > '0' + kFanout) return std::nullopt;
        path.indices_[path.depth_++] = static_cast<std::uint8_t>(part[0] - '0');
        if (dot == std::string_view::npos) break;
        pos = dot + 1;
    }
    return path;
}

TreePath TreePath::parent() const {
    if (!has_parent()) throw std::logic_error("depth-1 path has no parent path");
    TreePath p = *this;
    p.indices_[--p.depth_] = 0;
    return p;
}

TreePath TreePath::child(int index) const {
    if (depth_ == kMaxDepth) throw std::logic_error("leaf path has no children");
    if (index < 1 || index > kFanout) throw std::invalid_argument("child index out of range");
    TreePath c = *this;
    c.indices_[c.depth_++] = static_cast<std::uint8_t>(index);
    return c;
}

std::size_t TreePath::dfs_index() const noexcept {
    // Subtree sizes: depth-1 node spans 13 slots, depth-2 node spans 4.
    std::size_t idx = static_cast<std::size_t>(indices_[0] - 1) * 13;
    if (depth_ >= 2) idx += 1 + static_cast<std::size_t>(indices_[1] - 1) * 4;
    if (depth_ >= 3) idx += 1 + static_cast<std::size_t>(indices_[2] - 1);
    return idx;
}

TreePath TreePath::from_dfs_index(std::size_t index) {
    return all_paths().at(index);
}

std::string TreePath::str() const {
    std::string s;
    for (int i = 0; i < depth_; ++i) {
        if (i) s += '.';
        s += static_cast<char>('0' + indices_[i]);
    }
    return s;
}

std::strong_ordering operator<=>(const TreePath& a, const TreePath& b) {
    const int n = std::min(a.depth_, b.depth_);
    for (int i = 0; i < n; ++i) {
        if (auto c = a.indices_[i] <=> b.indices_[i]; c != 0) return c;
    }
    return a.depth_ <=> b.depth_;
}

const std::vector<TreePath>& all_paths() {
    static const std::vector<TreePath> paths = [] {
        std::vector<TreePath> out;
        out.reserve(kTreeSize);
        for (int a = 1; a <= kFanout; ++a) {
            out.push_back(TreePath{a});
            for (int b = 1; b <= kFanout; ++b) {
                out.push_back(TreePath{a, b});
                for (int c = 1; c <= kFanout; ++c) out.push_back(TreePath{a, b, c});
            }
        }
        return out;
    }();
    return paths;
}

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char ch : trim(text)) {
        if (std::isspace(ch)) {
            pending_space = true;
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += static_cast<char>(std::tolower(ch));
    }
    return out;
}

std::string_view to_string(TreeError::Kind kind) {
    switch (kind) {
        case TreeError::Kind::MalformedLine: return "MalformedLine";
        case TreeError::Kind::PathGap: return "PathGap";
        case TreeError::Kind::WrongFanout: return "WrongFanout";
        case TreeError::Kind::DuplicateText: return "DuplicateText";
        case TreeError::Kind::DuplicatePath: return "DuplicatePath";
        case TreeError::Kind::UnknownPath: return "UnknownPath";
    }
    return "Unknown";
}

QTree::QTree(std::string id, std::string base_query, std::vector<QNode> nodes)
    : id_(std::move(id)), base_query_(std::move(base_query)) {
    std::vector<std::optional<std::string>> slots(kTreeSize);
    for (auto& node : nodes) {
        if (node.path.depth() == 0) throw TreeError(TreeError::Kind::UnknownPath, "empty tree path");
        auto& slot = slots[node.path.dfs_index()];
        if (slot) throw TreeError(TreeError::Kind::DuplicatePath, "duplicate path " + node.path.str());
        const std::string_view text = trim(node.text);
        if (text.empty() || text.find_first_of("\r\n") != std::string_view::npos) {
            throw TreeError(TreeError::Kind::MalformedLine, "node " + node.path.str() + " has empty or multi-line text");
        }
        slot = std::string(text);
    }
    for (const auto& path : all_paths()) {
        if (!slots[path.dfs_index()]) {
            // A missing child with a present parent is a fanout problem; a missing
            // parent under present children is a gap.
            bool has_descendant = false;
            if (path.depth() < kMaxDepth) {
                for (int i = 1; i <= kFanout; ++i) has_descendant |= slots[path.child(i).dfs_index()].has_value();
            }
            if (has_descendant) throw TreeError(TreeError::Kind::PathGap, "missing parent node " + path.str());
            throw TreeError(TreeError::Kind::WrongFanout, "missing node " + path.str());
        }
    }

    std::unordered_map<std::string, TreePath> seen;
    nodes_.reserve(kTreeSize);
    for (const auto& path : all_paths()) {
        std::string& text = *slots[path.dfs_index()];
        auto [it, inserted] = seen.emplace(normalize_text(text), path);
        if (!inserted) {
            throw TreeError(TreeError::Kind::DuplicateText,
                            "nodes " + it->second.str() + " and " + path.str() + " share text");
        }
        nodes_.push_back(QNode{path, std::move(text)});
    }
}

QTree parse_tree(std::string_view raw_text, std::string base_query, std::string id) {
    std::vector<QNode> nodes;
    std::set<TreePath> present;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= raw_text.size()) {
        const std::size_t eol = raw_text.find('\n', pos);
        const std::string_view line =
            trim_right(raw_text.substr(pos, eol == std::string_view::npos ? raw_text.npos : eol - pos));
        pos = eol == std::string_view::npos ? raw_text.size() + 1 : eol + 1;
        ++line_no;
        if (line.empty()) continue;

        const auto fail = [&](TreeError::Kind kind, const std::string& why) {
            throw TreeError(kind, "line " + std::to_string(line_no) + ": " + why);
        };

        const std::size_t indent = line.find_first_not_of(' ');
        const std::string_view body = line.substr(indent);
        const std::size_t space = body.find(' ');
        if (space == std::string_view::npos) fail(TreeError::Kind::MalformedLine, "missing number prefix");
        const std::string_view number = body.substr(0, space);
        if (number.back() != '.') fail(TreeError::Kind::MalformedLine, "number prefix must end with '.'");

        auto path = TreePath::parse(number);
        if (!path) {
            // Distinguish "4." / "1.5." (a fourth child) from garbage.
            const bool numeric = std::all_of(number.begin(), number.end(),
                                             [](char c) { return c == '.' || std::isdigit(static_cast<unsigned char>(c)); });
            if (numeric && std::count(number.begin(), number.end(), '.') <= kMaxDepth) {
                fail(TreeError::Kind::WrongFanout, "index out of range in " + std::string(number));
            }
            fail(TreeError::Kind::MalformedLine, "bad number prefix '" + std::string(number) + "'");
        }
        if (indent != static_cast<std::size_t>(4 * (path->depth() - 1))) {
            fail(TreeError::Kind::MalformedLine, "indentation must be 4 spaces per level");
        }
        if (path->has_parent() && !present.count(path->parent())) {
            fail(TreeError::Kind::PathGap, path->str() + " appears before its parent");
        }
        if (!present.insert(*path).second) fail(TreeError::Kind::DuplicatePath, "duplicate path " + path->str());

        const std::string_view text = trim(body.substr(space + 1));
        if (text.empty()) fail(TreeError::Kind::MalformedLine, "empty subquery text");
        nodes.push_back(QNode{*path, std::string(text)});
    }
    return QTree(std::move(id), std::move(base_query), std::move(nodes));
}

std::string render_line(const TreePath& path, std::string_view text) {
    std::string line(static_cast<std::size_t>(4 * (path.depth() - 1)), ' ');
    line += path.str();
    line += ". ";
    line += text;
    return line;
}

std::string render_tree(const QTree& tree) {
    std::string out;
    for (const auto& node : tree.nodes()) {
        out += render_line(node.path, node.text);
        out += '\n';
    }
    return out;
}

std::vector<TreePath> neighbors(const TreePath& path) {
    if (path.depth() == 0) throw TreeError(TreeError::Kind::UnknownPath, "empty tree path");
    std::vector<TreePath> out;
    if (path.has_parent()) {
        const TreePath parent = path.parent();
        out.push_back(parent);
        for (int i = 1; i <= kFanout; ++i) {
            if (auto sib = parent.child(i); sib != path) out.push_back(sib);
        }
    } else {
        for (int i = 1; i <= kFanout; ++i) {
            if (TreePath sib{i}; sib != path) out.push_back(sib);
        }
    }
    if (path.depth() < kMaxDepth) {
        for (int i = 1; i <= kFanout; ++i) out.push_back(path.child(i));
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool adjacent(const TreePath& a, const TreePath& b) {
    if (a == b) return false;
    if (a.depth() == b.depth()) {
        return a.depth() == 1 || a.parent() == b.parent();
    }
    const TreePath& deep = a.depth() > b.depth() ? a : b;
    const TreePath& shallow = a.depth() > b.depth() ? b : a;
    return deep.depth() == shallow.depth() + 1 && deep.parent() == shallow;
}

nlohmann::json tree_to_json(const QTree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : tree.nodes()) nodes.push_back({{"path", node.path.str()}, {"text", node.text}});
    nlohmann::json j;
    if (!tree.id().empty()) j["tree_id"] = tree.id();
    j["base_query"] = tree.base_query();
    j["nodes"] = std::move(nodes);
    return j;
}

QTree tree_from_json(const nlohmann::json& j) {
    std::vector<QNode> nodes;
    for (const auto& n : j.at("nodes")) {
        const auto text = n.at("path").get<std::string>();
        auto path = TreePath::parse(text);
        if (!path) throw TreeError(TreeError::Kind::UnknownPath, "bad path '" + text + "'");
        nodes.push_back(QNode{*path, n.at("text").get<std::string>()});
    }
    return QTree(j.value("tree_id", std::string{}), j.at("base_query").get<std::string>(), std::move(nodes));
}

}  // namespace c2kit
