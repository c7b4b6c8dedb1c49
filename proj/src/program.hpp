#pragma once

#include <memory>
#include <stdexcept>
#include <string>

// The question DSL: parenthesized prefix programs over Scene / Filter /
// Exist / MetaVerify / Locate, executed with soft scores.
namespace hce {

enum class NodeKind { scene, filter, exist, meta_verify, locate };

struct ProgramNode {
    NodeKind kind = NodeKind::scene;
    std::unique_ptr<ProgramNode> child;  // filter/exist/locate
    std::string concept_name;            // filter: concept; meta_verify: first concept
    std::string concept_b;               // meta_verify only
    std::string metaconcept;             // meta_verify only
};

struct Program {
    std::unique_ptr<ProgramNode> root;

    std::string to_text() const;
    bool is_boolean() const;  // exist or meta_verify root
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t offset);
    std::size_t offset;
};

struct TypeError : std::runtime_error {
    TypeError(const std::string& msg, const std::string& node_path);
    std::string node_path;
};

// Grammar: Scene() | Filter(<expr>, <ident>) | Exist(<expr>) |
// MetaVerify(<ident>, <ident>, <ident>) | Locate(<expr>).
// Identifiers are lowercase words with underscores; whitespace-insensitive.
Program parse_program(const std::string& text);

}  // namespace hce
