#include "program.hpp"

#include <cctype>

namespace hce {
namespace {

bool is_mask(const ProgramNode& n) {
    return n.kind == NodeKind::scene || n.kind == NodeKind::filter;
}

class Parser {
  public:
    explicit Parser(const std::string& text) : text_(text) {}

    Program parse() {
        Program p;
        p.root = parse_node("root");
        skip_ws();
        if (pos_ != text_.size()) {
            throw ParseError("trailing characters after program", pos_);
        }
        return p;
    }

  private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != c) {
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
        ++pos_;
    }

    std::string word() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
                ++pos_;
            } else {
                break;
            }
        }
        if (pos_ == start) {
            throw ParseError("expected identifier", pos_);
        }
        return text_.substr(start, pos_ - start);
    }

    std::string ident() {
        const std::size_t start = pos_;
        std::string w = word();
        for (char c : w) {
            if (!(std::islower(static_cast<unsigned char>(c)) || c == '_' ||
                  std::isdigit(static_cast<unsigned char>(c)))) {
                throw ParseError("identifiers are lowercase words with underscores", start);
            }
        }
        return w;
    }

    std::unique_ptr<ProgramNode> parse_node(const std::string& path) {
        const std::size_t start = pos_;
        (void)start;
        skip_ws();
        const std::string head = word();
        auto node = std::make_unique<ProgramNode>();
        if (head == "Scene") {
            node->kind = NodeKind::scene;
            expect('(');
            expect(')');
        } else if (head == "Filter") {
            node->kind = NodeKind::filter;
            expect('(');
            node->child = parse_node(path + ".filter");
            if (!is_mask(*node->child)) {
                throw TypeError("Filter requires an object-mask argument", path);
            }
            expect(',');
            node->concept_name = ident();
            expect(')');
        } else if (head == "Exist" || head == "Locate") {
            node->kind = head == "Exist" ? NodeKind::exist : NodeKind::locate;
            expect('(');
            node->child = parse_node(path + (head == "Exist" ? ".exist" : ".locate"));
            if (!is_mask(*node->child)) {
                throw TypeError(head + " requires an object-mask argument", path);
            }
            expect(')');
        } else if (head == "MetaVerify") {
            if (path != "root") {
                throw TypeError("MetaVerify is only legal at the root", path);
            }
            node->kind = NodeKind::meta_verify;
            expect('(');
            node->concept_name = ident();
            expect(',');
            node->concept_b = ident();
            expect(',');
            node->metaconcept = ident();
            expect(')');
        } else {
            throw ParseError("unknown operator: " + head, pos_ - head.size());
        }
        return node;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

std::string node_text(const ProgramNode& n) {
    switch (n.kind) {
        case NodeKind::scene:
            return "Scene()";
        case NodeKind::filter:
            return "Filter(" + node_text(*n.child) + ", " + n.concept_name + ")";
        case NodeKind::exist:
            return "Exist(" + node_text(*n.child) + ")";
        case NodeKind::locate:
            return "Locate(" + node_text(*n.child) + ")";
        case NodeKind::meta_verify:
            return "MetaVerify(" + n.concept_name + ", " + n.concept_b + ", " +
                   n.metaconcept + ")";
    }
    return {};
}

}  // namespace

ParseError::ParseError(const std::string& msg, std::size_t off)
    : std::runtime_error(msg + " at offset " + std::to_string(off)), offset(off) {}

TypeError::TypeError(const std::string& msg, const std::string& path)
    : std::runtime_error(msg + " (at " + path + ")"), node_path(path) {}

std::string Program::to_text() const { return root ? node_text(*root) : std::string(); }

bool Program::is_boolean() const {
    return root &&
           (root->kind == NodeKind::exist || root->kind == NodeKind::meta_verify);
}

Program parse_program(const std::string& text) { return Parser(text).parse(); }

}  // namespace hce
