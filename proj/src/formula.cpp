#include "sheetguard/formula.hpp"

#include <cctype>

#include "sheetguard/error.hpp"
#include "sheetguard/textio.hpp"

namespace sheetguard::formula {

namespace {

enum class Tok {
  Number,
  String,
  Bool,
  Error,
  Ref,
  Func,
  Op,
  Percent,
  LParen,
  RParen,
  Comma,
  Colon,
  End,
};

struct Token {
  Token(Tok k, std::size_t p, std::string t = {}) : kind(k), pos(p), text(std::move(t)) {}

  Tok kind;
  std::size_t pos;
  std::string text;  // operator text, function name, string contents
  double number = 0.0;
  bool boolean = false;
  ErrorCode error = ErrorCode::Value;
  CellRef ref;
};

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$';
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// "$A$1", "b2", "$C7"
std::optional<CellRef> match_ref(std::string_view word) {
  CellRef ref;
  std::size_t i = 0;
  if (i < word.size() && word[i] == '$') ref.col_abs = true, ++i;
  std::size_t letters = i;
  while (i < word.size() && std::isalpha(static_cast<unsigned char>(word[i]))) ++i;
  auto col = column_number(word.substr(letters, i - letters));
  if (!col) return std::nullopt;
  if (i < word.size() && word[i] == '$') ref.row_abs = true, ++i;
  auto rc = parse_a1(std::string(column_letters(*col)) + std::string(word.substr(i)));
  if (!rc || word.substr(i).find('$') != std::string_view::npos) return std::nullopt;
  ref.row = rc->first;
  ref.col = *col;
  return ref;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (pos_ >= src_.size()) {
        out.push_back({Tok::End, pos_, {}});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  [[noreturn]] void unknown(std::size_t at, const std::string& what) {
    throw FormulaError(Errc::UnknownToken, at,
                       "unknown token at offset " + std::to_string(at) + ": " + what);
  }

  Token next() {
    std::size_t start = pos_;
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))))
      return number();
    if (c == '"') return string();
    if (c == '#') return error_literal();
    if (c == '\'') return quoted_ref();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') return word();

    ++pos_;
    switch (c) {
      case '(': return {Tok::LParen, start, "("};
      case ')': return {Tok::RParen, start, ")"};
      case ',': return {Tok::Comma, start, ","};
      case ':': return {Tok::Colon, start, ":"};
      case '%': return {Tok::Percent, start, "%"};
      case '+': case '-': case '*': case '/': case '^': case '&': case '=':
        return {Tok::Op, start, std::string(1, c)};
      case '<':
        if (pos_ < src_.size() && (src_[pos_] == '=' || src_[pos_] == '>'))
          return {Tok::Op, start, std::string{c, src_[pos_++]}};
        return {Tok::Op, start, "<"};
      case '>':
        if (pos_ < src_.size() && src_[pos_] == '=') return {Tok::Op, start, std::string{c, src_[pos_++]}};
        return {Tok::Op, start, ">"};
      default:
        unknown(start, std::string(1, c));
    }
  }

  Token number() {
    std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') ++pos_, digits();
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
        digits();
      else
        pos_ = save;
    }
    std::string_view text = src_.substr(start, pos_ - start);
    std::string normalized(text);
    if (normalized.front() == '.') normalized.insert(normalized.begin(), '0');
    if (normalized.back() == '.') normalized.pop_back();
    auto v = parse_decimal(normalized);
    if (!v) unknown(start, std::string(text));
    Token t{Tok::Number, start, std::string(text)};
    t.number = *v;
    return t;
  }

  Token string() {
    std::size_t start = pos_++;
    std::string value;
    while (true) {
      if (pos_ >= src_.size())
        throw FormulaError(Errc::SyntaxError, start,
                           "unterminated string literal at offset " + std::to_string(start));
      char c = src_[pos_++];
      if (c == '"') {
        if (pos_ < src_.size() && src_[pos_] == '"') {
          value += '"';
          ++pos_;
          continue;
        }
        break;
      }
      value += c;
    }
    Token t{Tok::String, start, value};
    return t;
  }

  Token error_literal() {
    std::size_t start = pos_;
    for (std::string_view code : {"#DIV/0!", "#N/A", "#NAME?", "#NULL!", "#NUM!", "#REF!", "#VALUE!"}) {
      if (src_.size() - pos_ >= code.size() && upper(src_.substr(pos_, code.size())) == code) {
        pos_ += code.size();
        Token t{Tok::Error, start, std::string(code)};
        t.error = *parse_error_code(code);
        return t;
      }
    }
    unknown(start, std::string(src_.substr(start, 8)));
  }

  Token ref_after_sheet(std::size_t start, std::string sheet) {
    std::size_t ws = pos_;
    while (pos_ < src_.size() && is_word_char(src_[pos_])) ++pos_;
    auto ref = match_ref(src_.substr(ws, pos_ - ws));
    if (!ref || sheet.empty())
      throw FormulaError(Errc::SyntaxError, ws,
                         "expected cell reference after sheet name at offset " + std::to_string(ws));
    ref->sheet = std::move(sheet);
    Token t{Tok::Ref, start, {}};
    t.ref = *ref;
    return t;
  }

  Token quoted_ref() {
    std::size_t start = pos_++;
    std::string sheet;
    while (true) {
      if (pos_ >= src_.size())
        throw FormulaError(Errc::SyntaxError, start,
                           "unterminated sheet name at offset " + std::to_string(start));
      char c = src_[pos_++];
      if (c == '\'') {
        if (pos_ < src_.size() && src_[pos_] == '\'') {
          sheet += '\'';
          ++pos_;
          continue;
        }
        break;
      }
      sheet += c;
    }
    if (pos_ >= src_.size() || src_[pos_] != '!')
      throw FormulaError(Errc::SyntaxError, pos_, "expected '!' after quoted sheet name");
    ++pos_;
    return ref_after_sheet(start, std::move(sheet));
  }

  Token word() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && is_word_char(src_[pos_])) ++pos_;
    std::string_view w = src_.substr(start, pos_ - start);
    bool has_dollar = w.find('$') != std::string_view::npos;

    if (pos_ < src_.size() && src_[pos_] == '!') {
      if (has_dollar) unknown(start, std::string(w));
      ++pos_;
      return ref_after_sheet(start, std::string(w));
    }
    if (pos_ < src_.size() && src_[pos_] == '(') {
      if (has_dollar) unknown(start, std::string(w));
      return {Tok::Func, start, upper(w)};
    }
    if (auto ref = match_ref(w)) {
      Token t{Tok::Ref, start, {}};
      t.ref = *ref;
      return t;
    }
    std::string u = upper(w);
    if (u == "TRUE" || u == "FALSE") {
      Token t{Tok::Bool, start, u};
      t.boolean = u == "TRUE";
      return t;
    }
    unknown(start, std::string(w));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

int binary_prec(BinaryOp op) {
  switch (op) {
    case BinaryOp::Eq: case BinaryOp::Ne: case BinaryOp::Lt:
    case BinaryOp::Le: case BinaryOp::Gt: case BinaryOp::Ge:
      return 1;
    case BinaryOp::Concat: return 2;
    case BinaryOp::Add: case BinaryOp::Sub: return 3;
    case BinaryOp::Mul: case BinaryOp::Div: return 4;
    case BinaryOp::Pow: return 5;
  }
  return 0;
}

constexpr int kNegPrec = 6;
constexpr int kPercentPrec = 7;
constexpr int kAtomPrec = 8;

std::optional<BinaryOp> binary_from(std::string_view text) {
  static constexpr std::pair<std::string_view, BinaryOp> kOps[] = {
      {"=", BinaryOp::Eq},   {"<>", BinaryOp::Ne}, {"<", BinaryOp::Lt},  {"<=", BinaryOp::Le},
      {">", BinaryOp::Gt},   {">=", BinaryOp::Ge}, {"&", BinaryOp::Concat}, {"+", BinaryOp::Add},
      {"-", BinaryOp::Sub},  {"*", BinaryOp::Mul}, {"/", BinaryOp::Div},  {"^", BinaryOp::Pow},
  };
  for (const auto& [t, op] : kOps)
    if (t == text) return op;
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  NodePtr parse() {
    NodePtr root = binary(1);
    const Token& t = peek();
    if (t.kind == Tok::RParen)
      throw FormulaError(Errc::UnbalancedParens, t.pos,
                         "unmatched ')' at offset " + std::to_string(t.pos));
    if (t.kind != Tok::End) expected(t, "end of formula");
    return root;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& take() { return toks_[i_++]; }

  [[noreturn]] void expected(const Token& t, const std::string& what) {
    if (t.kind == Tok::End && open_ > 0)
      throw FormulaError(Errc::UnbalancedParens, t.pos, "missing ')' at end of formula");
    throw FormulaError(Errc::SyntaxError, t.pos,
                       "expected " + what + " at offset " + std::to_string(t.pos));
  }

  // Precedence climbing over the five binary levels.
  NodePtr binary(int level) {
    if (level > 5) return unary();
    NodePtr lhs = binary(level + 1);
    while (peek().kind == Tok::Op) {
      auto op = binary_from(peek().text);
      if (!op || binary_prec(*op) != level) break;
      take();
      NodePtr rhs = binary(level + 1);
      lhs = make_binary(*op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  NodePtr unary() {
    if (peek().kind == Tok::Op && (peek().text == "-" || peek().text == "+")) {
      bool negate = take().text == "-";
      NodePtr operand = unary();
      return negate ? make_unary(UnaryOp::Negate, std::move(operand)) : operand;
    }
    NodePtr node = primary();
    while (peek().kind == Tok::Percent) {
      take();
      node = make_unary(UnaryOp::Percent, std::move(node));
    }
    return node;
  }

  NodePtr primary() {
    const Token& t = take();
    switch (t.kind) {
      case Tok::Number: return make_number(t.number);
      case Tok::String: return make_text(t.text);
      case Tok::Bool: return make_bool(t.boolean);
      case Tok::Error: return make_error(t.error);
      case Tok::Ref: {
        if (peek().kind != Tok::Colon) return make_ref(t.ref);
        take();
        const Token& end = take();
        if (end.kind != Tok::Ref) expected(end, "cell reference after ':'");
        CellRef e = end.ref;
        // "Data!A1:B2" and "Data!A1:Data!B2" name the same range.
        if ((e.sheet && !t.ref.sheet) || (e.sheet && !sheet_equal(*e.sheet, *t.ref.sheet)))
          throw FormulaError(Errc::SyntaxError, end.pos, "range ends must be on the same sheet");
        e.sheet = t.ref.sheet;
        return make_range(t.ref, e);
      }
      case Tok::Func: {
        std::string name = t.text;
        take();  // '('
        ++open_;
        std::vector<NodePtr> args;
        if (peek().kind != Tok::RParen) {
          while (true) {
            args.push_back(binary(1));
            if (peek().kind == Tok::Comma) {
              take();
              continue;
            }
            break;
          }
        }
        close_paren();
        return make_call(std::move(name), std::move(args));
      }
      case Tok::LParen: {
        ++open_;
        NodePtr inner = binary(1);
        close_paren();
        return inner;
      }
      case Tok::RParen:
        if (open_ > 0) expected(t, "operand");
        throw FormulaError(Errc::UnbalancedParens, t.pos,
                           "unexpected ')' at offset " + std::to_string(t.pos));
      default:
        expected(t, "operand");
    }
  }

  void close_paren() {
    const Token& t = peek();
    if (t.kind != Tok::RParen) {
      if (t.kind == Tok::End)
        throw FormulaError(Errc::UnbalancedParens, t.pos, "missing ')' at end of formula");
      expected(t, "',' or ')'");
    }
    take();
    --open_;
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  int open_ = 0;
};

int node_prec(const Node& n) {
  if (auto* b = std::get_if<Binary>(&n.kind)) return binary_prec(b->op);
  if (auto* u = std::get_if<Unary>(&n.kind)) return u->op == UnaryOp::Negate ? kNegPrec : kPercentPrec;
  return kAtomPrec;
}

std::string quote_text(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string a1_ref(const CellRef& r) {
  std::string out;
  if (r.col_abs) out += '$';
  out += column_letters(r.col);
  if (r.row_abs) out += '$';
  return out + std::to_string(r.row);
}

struct A1Style {
  std::string ref(const CellRef& r) const {
    return (r.sheet ? sheet_prefix(*r.sheet) : std::string{}) + a1_ref(r);
  }
  std::string range(const Range& r) const {
    return (r.start.sheet ? sheet_prefix(*r.start.sheet) : std::string{}) + a1_ref(r.start) + ":" +
           a1_ref(r.end);
  }
};

struct R1C1Style {
  const CellAddress& host;

  static std::string axis(char tag, int value, bool abs, int origin) {
    if (abs) return tag + std::to_string(value);
    int offset = value - origin;
    if (offset == 0) return std::string(1, tag);
    return std::string(1, tag) + "[" + std::to_string(offset) + "]";
  }
  std::string bare(const CellRef& r) const {
    return axis('R', r.row, r.row_abs, host.row) + axis('C', r.col, r.col_abs, host.col);
  }
  std::string ref(const CellRef& r) const {
    return (r.sheet ? sheet_prefix(*r.sheet) : std::string{}) + bare(r);
  }
  std::string range(const Range& r) const {
    return (r.start.sheet ? sheet_prefix(*r.start.sheet) : std::string{}) + bare(r.start) + ":" +
           bare(r.end);
  }
};

template <typename Style>
void render(const Node& n, const Style& style, std::string& out) {
  auto child = [&](const Node& c, bool parens) {
    if (parens) out += '(';
    render(c, style, out);
    if (parens) out += ')';
  };
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, NumberLit>) {
          out += format_decimal(k.value);
        } else if constexpr (std::is_same_v<K, TextLit>) {
          out += quote_text(k.value);
        } else if constexpr (std::is_same_v<K, BoolLit>) {
          out += k.value ? "TRUE" : "FALSE";
        } else if constexpr (std::is_same_v<K, ErrorLit>) {
          out += error_code_text(k.code);
        } else if constexpr (std::is_same_v<K, CellRef>) {
          out += style.ref(k);
        } else if constexpr (std::is_same_v<K, Range>) {
          out += style.range(k);
        } else if constexpr (std::is_same_v<K, Unary>) {
          if (k.op == UnaryOp::Negate) {
            out += '-';
            child(*k.operand, node_prec(*k.operand) < kNegPrec);
          } else {
            child(*k.operand, node_prec(*k.operand) < kPercentPrec);
            out += '%';
          }
        } else if constexpr (std::is_same_v<K, Binary>) {
          int p = binary_prec(k.op);
          child(*k.lhs, node_prec(*k.lhs) < p);
          out += op_text(k.op);
          child(*k.rhs, node_prec(*k.rhs) <= p);
        } else if constexpr (std::is_same_v<K, Call>) {
          out += k.name;
          out += '(';
          for (std::size_t i = 0; i < k.args.size(); ++i) {
            if (i) out += ',';
            render(*k.args[i], style, out);
          }
          out += ')';
        }
      },
      n.kind);
}

void collect_refs(const Node& n, std::vector<Reference>& out) {
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, CellRef>) {
          out.emplace_back(k);
        } else if constexpr (std::is_same_v<K, Range>) {
          out.emplace_back(k);
        } else if constexpr (std::is_same_v<K, Unary>) {
          collect_refs(*k.operand, out);
        } else if constexpr (std::is_same_v<K, Binary>) {
          collect_refs(*k.lhs, out);
          collect_refs(*k.rhs, out);
        } else if constexpr (std::is_same_v<K, Call>) {
          for (const auto& a : k.args) collect_refs(*a, out);
        }
      },
      n.kind);
}

}  // namespace

std::string_view op_text(BinaryOp op) {
  switch (op) {
    case BinaryOp::Eq: return "=";
    case BinaryOp::Ne: return "<>";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Concat: return "&";
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Pow: return "^";
  }
  return "?";
}

bool operator==(const Node& a, const Node& b) {
  if (a.kind.index() != b.kind.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using K = std::decay_t<decltype(x)>;
        const K& y = std::get<K>(b.kind);
        if constexpr (std::is_same_v<K, NumberLit> || std::is_same_v<K, TextLit> ||
                      std::is_same_v<K, BoolLit>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<K, ErrorLit>) {
          return x.code == y.code;
        } else if constexpr (std::is_same_v<K, CellRef> || std::is_same_v<K, Range>) {
          return x == y;
        } else if constexpr (std::is_same_v<K, Unary>) {
          return x.op == y.op && *x.operand == *y.operand;
        } else if constexpr (std::is_same_v<K, Binary>) {
          return x.op == y.op && *x.lhs == *y.lhs && *x.rhs == *y.rhs;
        } else {
          if (x.name != y.name || x.args.size() != y.args.size()) return false;
          for (std::size_t i = 0; i < x.args.size(); ++i)
            if (!(*x.args[i] == *y.args[i])) return false;
          return true;
        }
      },
      a.kind);
}

NodePtr make_number(double v) { return std::make_shared<Node>(Node{NumberLit{v}}); }
NodePtr make_text(std::string v) { return std::make_shared<Node>(Node{TextLit{std::move(v)}}); }
NodePtr make_bool(bool v) { return std::make_shared<Node>(Node{BoolLit{v}}); }
NodePtr make_error(ErrorCode code) { return std::make_shared<Node>(Node{ErrorLit{code}}); }
NodePtr make_ref(CellRef ref) { return std::make_shared<Node>(Node{std::move(ref)}); }
NodePtr make_range(CellRef start, CellRef end) {
  end.sheet = start.sheet;
  return std::make_shared<Node>(Node{Range{std::move(start), std::move(end)}});
}
NodePtr make_unary(UnaryOp op, NodePtr operand) {
  return std::make_shared<Node>(Node{Unary{op, std::move(operand)}});
}
NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs) {
  return std::make_shared<Node>(Node{Binary{op, std::move(lhs), std::move(rhs)}});
}
NodePtr make_call(std::string name, std::vector<NodePtr> args) {
  return std::make_shared<Node>(Node{Call{upper(name), std::move(args)}});
}

NodePtr parse_formula(std::string_view source) {
  if (source.empty() || source.front() != '=')
    throw FormulaError(Errc::SyntaxError, 0, "formula must begin with '='");
  std::vector<Token> toks;
  try {
    toks = Lexer(source.substr(1)).run();
  } catch (const FormulaError& e) {
    throw FormulaError(e.code(), e.position() + 1, e.what());
  }
  for (auto& t : toks) ++t.pos;
  return Parser(std::move(toks)).parse();
}

std::string print_formula(const Node& ast) {
  std::string out = "=";
  render(ast, A1Style{}, out);
  return out;
}

NormalizedFormula normalize_relative(const Node& ast, const CellAddress& host) {
  std::string out = "=";
  render(ast, R1C1Style{host}, out);
  return {out};
}

std::vector<Reference> references_of(const Node& ast) {
  std::vector<Reference> out;
  collect_refs(ast, out);
  return out;
}

int max_if_depth(const Node& ast) {
  return std::visit(
      [](const auto& k) -> int {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Unary>) {
          return max_if_depth(*k.operand);
        } else if constexpr (std::is_same_v<K, Binary>) {
          return std::max(max_if_depth(*k.lhs), max_if_depth(*k.rhs));
        } else if constexpr (std::is_same_v<K, Call>) {
          int deepest = 0;
          for (const auto& a : k.args) deepest = std::max(deepest, max_if_depth(*a));
          return deepest + (k.name == "IF" ? 1 : 0);
        } else {
          return 0;
        }
      },
      ast.kind);
}

}  // namespace sheetguard::formula
