#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace c2kit {

inline constexpr int kFanout = 3;
inline constexpr int kMaxDepth = 3;
inline constexpr std::size_t kTreeSize = 39;  // 3 + 9 + 27

/// Position of a subquery inside a QTree, e.g. "1.2.3".
///
/// Ordering is lexicographic with a prefix sorting before its extensions,
/// which is exactly depth-first numeric order ("1" < "1.1" < "1.1.1" < "1.2").
class TreePath {
public:
    TreePath() = default;
    TreePath(std::initializer_list<int> indices);

    /// Strict parse of "N", "N.M" or "N.M.K" with each index in 1..3.
    /// A single trailing '.' is accepted ("1.2." is the listing form).
    static std::optional<TreePath> parse(std::string_view text);

    int depth() const noexcept { return depth_; }
    int operator[](int level) const { return indices_.at(level); }

    bool has_parent() const noexcept { return depth_ > 1; }
    TreePath parent() const;
    TreePath child(int index) const;

    /// Position of this node in the depth-first listing of a full tree (0..38).
    std::size_t dfs_index() const noexcept;
    static TreePath from_dfs_index(std::size_t index);

    std::string str() const;

    friend bool operator==(const TreePath&, const TreePath&) = default;
    friend std::strong_ordering operator<=>(const TreePath& a, const TreePath& b);

private:
    std::array<std::uint8_t, kMaxDepth> indices_{};
    std::uint8_t depth_ = 0;
};

/// All 39 paths of a full tree in depth-first order.
const std::vector<TreePath>& all_paths();

struct QNode {
    TreePath path;
    std::string text;
};

/// Case-insensitive, whitespace-collapsed form used for duplicate detection.
std::string normalize_text(std::string_view text);

class TreeError : public std::runtime_error {
public:
    enum class Kind { MalformedLine, PathGap, WrongFanout, DuplicateText, DuplicatePath, UnknownPath };

    TreeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

std::string_view to_string(TreeError::Kind kind);

/// Immutable 3x3x3 subquery tree. Construction validates every invariant.
class QTree {
public:
    /// nodes may arrive in any order; throws TreeError on any violation.
    QTree(std::string id, std::string base_query, std::vector<QNode> nodes);

    const std::string& id() const noexcept { return id_; }
    const std::string& base_query() const noexcept { return base_query_; }

    /// Nodes in canonical depth-first order.
    const std::vector<QNode>& nodes() const noexcept { return nodes_; }
    const std::string& text(const TreePath& path) const { return nodes_.at(path.dfs_index()).text; }

private:
    std::string id_;
    std::string base_query_;
    std::vector<QNode> nodes_;
};

/// Parse the indented numbered listing:
///
///     1. What is the plot of The Woman Hunt?
///         1.1. What are the main events in The Woman Hunt?
///             1.1.1. What initiates the conflict in The Woman Hunt?
///
/// Indentation is 4 spaces per level below the first. Blank lines and trailing
/// whitespace are ignored.
QTree parse_tree(std::string_view raw_text, std::string base_query, std::string id = {});

/// One listing line, "    1.2. text", without a trailing newline.
std::string render_line(const TreePath& path, std::string_view text);

/// Inverse of parse_tree; every line ends with '\n'.
std::string render_tree(const QTree& tree);

/// Parent, children and same-parent siblings. Depth-1 nodes are mutual siblings
/// under the implicit base-query root. Sorted in depth-first order.
std::vector<TreePath> neighbors(const TreePath& path);
bool adjacent(const TreePath& a, const TreePath& b);

nlohmann::json tree_to_json(const QTree& tree);
QTree tree_from_json(const nlohmann::json& j);

}  // namespace c2kit
