#include "minios/gasm.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>

#include "minios/samples.hpp"

namespace minios::gasm {

using vmcu::Format;
using vmcu::Instruction;
using vmcu::Opcode;

// ------------------------------------------------------------ AsmSource

AsmSource AsmSource::from_text(std::string_view text, const std::string& file) {
  AsmSource src;
  int n = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    src.lines.push_back({std::string(line), file, ++n});
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return src;
}

void AsmSource::append(const AsmSource& other) {
  lines.insert(lines.end(), other.lines.begin(), other.lines.end());
}

std::string AsmSource::text() const {
  std::string out;
  for (const auto& l : lines) {
    out += l.text;
    out += '\n';
  }
  return out;
}

AsmError::AsmError(std::string file, int line, const std::string& message)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + message),
      file_(std::move(file)),
      line_(line),
      message_(message) {}

// ------------------------------------------------------------ AppBinary

namespace {

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get16(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint16_t>(b[off] | b[off + 1] << 8);
}

std::uint32_t get32(std::span<const std::uint8_t> b, std::size_t off) {
  return std::uint32_t{b[off]} | std::uint32_t{b[off + 1]} << 8 |
         std::uint32_t{b[off + 2]} << 16 | std::uint32_t{b[off + 3]} << 24;
}

std::uint32_t payload_crc(const std::vector<std::uint8_t>& code,
                          const std::vector<std::uint8_t>& data) {
  uLong c = ::crc32(0L, Z_NULL, 0);
  // crc32_z(c, nullptr, 0) resets to 0, so skip empty sections.
  if (!code.empty()) c = ::crc32_z(c, code.data(), code.size());
  if (!data.empty()) c = ::crc32_z(c, data.data(), data.size());
  return static_cast<std::uint32_t>(c);
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong c = ::crc32(0L, Z_NULL, 0);
  if (bytes.empty()) return static_cast<std::uint32_t>(c);
  return static_cast<std::uint32_t>(::crc32_z(c, bytes.data(), bytes.size()));
}

void AppBinary::finalize() {
  header.code_size = static_cast<std::uint32_t>(code.size());
  header.data_size = static_cast<std::uint32_t>(data.size());
  header.crc = header.flags == 0 ? payload_crc(code, data) : 0;
}

std::vector<std::uint8_t> AppBinary::serialize() const {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + code.size() + data.size());
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put16(out, header.version);
  put16(out, header.flags);
  put32(out, header.entry);
  put32(out, header.code_size);
  put32(out, header.data_size);
  put32(out, header.bss_size);
  put32(out, header.min_stack);
  put32(out, header.crc);
  out.insert(out.end(), code.begin(), code.end());
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

AppBinary AppBinary::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw FormatError("truncated header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw FormatError("bad magic");
  AppBinary bin;
  bin.header.version = get16(bytes, 4);
  bin.header.flags = get16(bytes, 6);
  bin.header.entry = get32(bytes, 8);
  bin.header.code_size = get32(bytes, 12);
  bin.header.data_size = get32(bytes, 16);
  bin.header.bss_size = get32(bytes, 20);
  bin.header.min_stack = get32(bytes, 24);
  bin.header.crc = get32(bytes, 28);
  const auto& h = bin.header;
  if (h.version != kFormatVersion) throw FormatError("unsupported version");
  if (h.code_size % 4 != 0) throw FormatError("code size not word aligned");
  if (h.entry >= h.code_size || h.entry % 4 != 0) throw FormatError("bad entry point");
  const std::uint64_t payload = std::uint64_t{h.code_size} + h.data_size;
  if (bytes.size() != kHeaderSize + payload) throw FormatError("truncated payload");
  bin.code.assign(bytes.begin() + kHeaderSize, bytes.begin() + kHeaderSize + h.code_size);
  bin.data.assign(bytes.begin() + kHeaderSize + h.code_size, bytes.end());
  if (h.flags == 0 && payload_crc(bin.code, bin.data) != h.crc) throw FormatError("crc mismatch");
  return bin;
}

// ------------------------------------------------------------ assembler

namespace {

enum class Section : std::uint8_t { Text, Data, Bss };

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

std::uint32_t align4(std::uint32_t v) { return (v + 3) & ~3u; }

struct Statement {
  const SourceLine* src = nullptr;
  std::vector<std::string> labels;
  std::string op;  // upper-cased mnemonic or directive
  std::vector<std::string> args;
  Section section = Section::Text;
  std::uint32_t offset = 0;  // within its section
  std::uint32_t size = 0;
  bool wide = false;  // LI expanded to the five-word form
};

class Assembler {
 public:
  Assembler(const AsmSource& src, std::uint32_t base) : src_(src), base_(base) {}

  Assembly run() {
    parse_all();
    pass1();
    return pass2();
  }

 private:
  [[noreturn]] void fail(const SourceLine* at, const std::string& msg) const {
    if (at == nullptr) throw AsmError("<input>", 0, msg);
    throw AsmError(at->file, at->line, msg);
  }

  // Strip a ';' comment that is not inside a string or char literal.
  static std::string_view strip_comment(std::string_view s) {
    bool in_str = false;
    bool in_chr = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const char c = s[i];
      if ((in_str || in_chr) && c == '\\') {
        ++i;
        continue;
      }
      if (c == '"' && !in_chr) in_str = !in_str;
      else if (c == '\'' && !in_str) in_chr = !in_chr;
      else if (c == ';' && !in_str && !in_chr) return s.substr(0, i);
    }
    return s;
  }

  std::vector<std::string> split_args(std::string_view s, const SourceLine* at) const {
    std::vector<std::string> out;
    int depth = 0;
    bool in_str = false;
    bool in_chr = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const char c = s[i];
      if ((in_str || in_chr) && c == '\\') {
        ++i;
        continue;
      }
      if (c == '"' && !in_chr) in_str = !in_str;
      else if (c == '\'' && !in_str) in_chr = !in_chr;
      else if (!in_str && !in_chr) {
        if (c == '[') ++depth;
        else if (c == ']') --depth;
        else if (c == ',' && depth == 0) {
          out.emplace_back(trim(s.substr(start, i - start)));
          start = i + 1;
        }
      }
    }
    if (in_str) fail(at, "unterminated string");
    auto last = trim(s.substr(start));
    if (!last.empty() || !out.empty()) out.emplace_back(last);
    for (const auto& a : out)
      if (a.empty()) fail(at, "empty operand");
    return out;
  }

  void parse_all() {
    std::vector<std::string> pending;
    for (const auto& line : src_.lines) {
      std::string_view s = trim(strip_comment(line.text));
      // Leading labels.
      while (!s.empty() && ident_start(s.front())) {
        std::size_t i = 1;
        while (i < s.size() && ident_char(s[i])) ++i;
        if (i < s.size() && s[i] == ':') {
          pending.emplace_back(s.substr(0, i));
          s = trim(s.substr(i + 1));
          if (pending.back().front() == '.') fail(&line, "bad label name " + pending.back());
        } else {
          break;
        }
      }
      if (s.empty()) {
        if (!pending.empty()) label_lines_.push_back(&line);
        continue;
      }
      Statement st;
      st.src = &line;
      std::size_t i = 0;
      while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      st.op = upper(s.substr(0, i));
      std::string_view rest = trim(s.substr(i));
      if (st.op == ".EQU") {
        // ".equ name value" and ".equ name, value" are both accepted.
        std::size_t j = 0;
        while (j < rest.size() && ident_char(rest[j])) ++j;
        std::string name(rest.substr(0, j));
        std::string_view value = trim(rest.substr(j));
        if (!value.empty() && value.front() == ',') value = trim(value.substr(1));
        if (name.empty() || value.empty()) fail(&line, "malformed directive .equ");
        st.args = {name, std::string(value)};
      } else {
        st.args = split_args(rest, &line);
      }
      st.labels = std::move(pending);
      pending.clear();
      stmts_.push_back(std::move(st));
    }
    trailing_labels_ = std::move(pending);
  }

  // ---- expressions

  struct Value {
    bool known = false;
    std::int64_t v = 0;
  };

  static std::optional<std::int64_t> parse_number(std::string_view t) {
    bool neg = false;
    if (!t.empty() && (t.front() == '-' || t.front() == '+')) {
      neg = t.front() == '-';
      t.remove_prefix(1);
    }
    if (t.empty()) return std::nullopt;
    int base = 10;
    if (t.size() > 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X')) {
      base = 16;
      t.remove_prefix(2);
    } else if (t.size() > 2 && t[0] == '0' && (t[1] == 'b' || t[1] == 'B')) {
      base = 2;
      t.remove_prefix(2);
    }
    std::string clean;
    for (char c : t)
      if (c != '_') clean += c;
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(clean.data(), clean.data() + clean.size(), v, base);
    if (ec != std::errc{} || p != clean.data() + clean.size()) return std::nullopt;
    const auto sv = static_cast<std::int64_t>(v);
    return neg ? -sv : sv;
  }

  std::optional<int> parse_char(std::string_view t, const SourceLine* at) const {
    if (t.size() < 3 || t.front() != '\'' || t.back() != '\'') return std::nullopt;
    const std::string bytes = unescape(t.substr(1, t.size() - 2), at);
    if (bytes.size() != 1) fail(at, "bad character literal");
    return static_cast<unsigned char>(bytes[0]);
  }

  std::string unescape(std::string_view s, const SourceLine* at) const {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      char c = s[i];
      if (c != '\\') {
        out += c;
        continue;
      }
      if (++i >= s.size()) fail(at, "bad escape");
      switch (s[i]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '0': out += '\0'; break;
        case '\\': out += '\\'; break;
        case '"': out += '"'; break;
        case '\'': out += '\''; break;
        case 'x': {
          if (i + 2 >= s.size()) fail(at, "bad escape");
          auto hex = s.substr(i + 1, 2);
          unsigned v = 0;
          auto [p, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), v, 16);
          if (ec != std::errc{} || p != hex.data() + 2) fail(at, "bad escape");
          out += static_cast<char>(v);
          i += 2;
          break;
        }
        default: fail(at, "bad escape");
      }
    }
    return out;
  }

  // Evaluates "term (+|- term)*". In pass 1 labels are unknown.
  Value eval(std::string_view expr, const SourceLine* at, bool pass2) {
    expr = trim(expr);
    if (!expr.empty() && expr.front() == '#') expr = trim(expr.substr(1));
    if (expr.empty()) fail(at, "missing operand");
    Value total{true, 0};
    std::size_t i = 0;
    int sign = 1;
    if (expr[0] == '-' || expr[0] == '+') {
      sign = expr[0] == '-' ? -1 : 1;
      i = 1;
    }
    while (i <= expr.size()) {
      // Find the end of the current term.
      std::size_t j = i;
      if (j < expr.size() && expr[j] == '\'') {
        j = expr.find('\'', j + (expr.substr(j + 1, 1) == "\\" ? 3 : 2));
        if (j == std::string_view::npos) fail(at, "bad character literal");
        ++j;
      } else {
        while (j < expr.size() && expr[j] != '+' && expr[j] != '-') ++j;
      }
      std::string_view term = trim(expr.substr(i, j - i));
      if (term.empty()) fail(at, "malformed expression '" + std::string(expr) + "'");
      Value tv = eval_term(term, at, pass2);
      if (!tv.known) total.known = false;
      total.v += sign * tv.v;
      if (j >= expr.size()) break;
      sign = expr[j] == '-' ? -1 : 1;
      i = j + 1;
    }
    return total;
  }

  Value eval_term(std::string_view term, const SourceLine* at, bool pass2) {
    if (auto n = parse_number(term)) return {true, *n};
    if (auto c = parse_char(term, at)) return {true, *c};
    if (!ident_start(term.front())) fail(at, "malformed expression '" + std::string(term) + "'");
    const std::string name(term);
    if (auto it = equs_.find(name); it != equs_.end()) return eval_equ(name, pass2);
    if (pass2) {
      auto it = symbols_.find(name);
      if (it == symbols_.end()) fail(at, "undefined label " + name);
      return {true, it->second};
    }
    return {false, 0};  // labels resolve in pass 2
  }

  Value eval_equ(const std::string& name, bool pass2) {
    auto& e = equs_.at(name);
    if (e.resolved) return {true, e.value};
    if (e.visiting) fail(e.at, "recursive .equ " + name);
    e.visiting = true;
    Value v = eval(e.expr, e.at, pass2);
    e.visiting = false;
    if (v.known) {
      e.resolved = true;
      e.value = v.v;
    }
    return v;
  }

  // ---- registers and operands

  std::uint8_t reg(std::string_view t, const SourceLine* at) const {
    const std::string u = upper(trim(t));
    if (u == "SP") return 13;
    if (u == "LR") return 14;
    if (u == "PC") return 15;
    if (u.size() >= 2 && u[0] == 'R') {
      if (auto n = parse_number(std::string_view(u).substr(1)); n && *n >= 0 && *n <= 15)
        return static_cast<std::uint8_t>(*n);
    }
    fail(at, "bad register '" + std::string(t) + "'");
  }

  void expect_args(const Statement& st, std::size_t n) const {
    if (st.args.size() != n)
      fail(st.src, st.op + " expects " + std::to_string(n) + " operand(s)");
  }

  // ---- pass 1

  std::uint32_t& counter(Section s) {
    switch (s) {
      case Section::Text: return text_size_;
      case Section::Data: return data_size_;
      case Section::Bss: return bss_size_;
    }
    return text_size_;
  }

  void bind(const std::vector<std::string>& labels, Section s, std::uint32_t off,
            const SourceLine* at) {
    for (const auto& l : labels) {
      if (label_pos_.contains(l) || equs_.contains(l)) fail(at, "duplicate label " + l);
      label_pos_[l] = {s, off};
      known_names_.insert(l);
    }
  }

  void pass1() {
    for (const auto& st : stmts_) {
      if (st.op == ".EQU") equ_names_.insert(st.args[0]);
    }
    Section cur = Section::Text;
    for (auto& st : stmts_) {
      const SourceLine* at = st.src;
      if (st.op == ".TEXT" || st.op == ".DATA") {
        if (!st.args.empty()) fail(at, "malformed directive " + lower(st.op));
        cur = st.op == ".TEXT" ? Section::Text : Section::Data;
        st.section = cur;
        st.offset = counter(cur);
        bind(st.labels, cur, counter(cur), at);
        continue;
      }
      if (st.op == ".EQU") {
        const auto& name = st.args[0];
        if (!ident_start(name.front())) fail(at, "malformed directive .equ");
        if (equs_.contains(name) || label_pos_.contains(name)) fail(at, "duplicate label " + name);
        equs_[name] = Equ{st.args[1], at};
        bind_pending_as_current(st, cur);
        continue;
      }
      if (st.op == ".STACK") {
        if (st.args.size() != 1) fail(at, "malformed directive .stack");
        stack_stmt_ = &st;
        bind_pending_as_current(st, cur);
        continue;
      }
      if (st.op == ".BSS") {
        if (st.args.size() != 1) fail(at, "malformed directive .bss");
        Value v = eval(st.args[0], at, false);
        if (!v.known || v.v < 0 || v.v > 0x100000) fail(at, "malformed directive .bss");
        st.section = Section::Bss;
        st.offset = bss_size_;
        st.size = align4(static_cast<std::uint32_t>(v.v));
        bind(st.labels, Section::Bss, st.offset, at);
        bss_size_ += st.size;
        continue;
      }
      if (st.op == ".ALIGN") {
        if (!st.args.empty()) fail(at, "malformed directive .align");
        st.section = cur;
        counter(cur) = align4(counter(cur));
        st.offset = counter(cur);
        bind(st.labels, cur, st.offset, at);
        continue;
      }
      if (st.op == ".ASCII" || st.op == ".ASCIZ") {
        if (st.args.size() != 1 || st.args[0].size() < 2 || st.args[0].front() != '"' ||
            st.args[0].back() != '"')
          fail(at, "malformed directive " + lower(st.op));
        const std::string bytes = unescape(
            std::string_view(st.args[0]).substr(1, st.args[0].size() - 2), at);
        st.section = cur;
        st.offset = counter(cur);
        st.size = static_cast<std::uint32_t>(bytes.size() + (st.op == ".ASCIZ" ? 1 : 0));
        bind(st.labels, cur, st.offset, at);
        counter(cur) += st.size;
        continue;
      }
      if (st.op == ".WORD") {
        if (st.args.empty()) fail(at, "malformed directive .word");
        st.section = cur;
        counter(cur) = align4(counter(cur));
        st.offset = counter(cur);
        st.size = static_cast<std::uint32_t>(4 * st.args.size());
        bind(st.labels, cur, st.offset, at);
        counter(cur) += st.size;
        continue;
      }
      if (st.op.front() == '.') fail(at, "malformed directive " + lower(st.op));

      // Instructions and pseudo-instructions.
      if (cur != Section::Text) fail(at, "instruction outside .text");
      st.section = Section::Text;
      text_size_ = align4(text_size_);
      st.offset = text_size_;
      st.size = 4 * instruction_words(st);
      bind(st.labels, Section::Text, st.offset, at);
      text_size_ += st.size;
    }
    const SourceLine* last = label_lines_.empty() ? nullptr : label_lines_.back();
    bind(trailing_labels_, cur, counter(cur), last);

    code_size_ = align4(text_size_);
    data_aligned_ = align4(data_size_);
    for (const auto& [name, pos] : label_pos_) {
      std::uint32_t addr = base_ + pos.second;
      if (pos.first == Section::Data) addr += code_size_;
      if (pos.first == Section::Bss) addr += code_size_ + data_aligned_;
      symbols_[name] = addr;
    }
  }

  void bind_pending_as_current(const Statement& st, Section cur) {
    bind(st.labels, cur, counter(cur), st.src);
  }

  static std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }

  std::uint32_t instruction_words(Statement& st) {
    const SourceLine* at = st.src;
    if (st.op == "LI") {
      expect_args(st, 2);
      Value v = eval(st.args[1], at, false);
      if (v.known && v.v >= 0 && v.v <= 0xFFFF) return 1;
      if (reg(st.args[0], at) == 12) fail(at, "LI of a wide constant cannot target r12");
      st.wide = true;
      return 5;
    }
    if (st.op == "LA") {
      expect_args(st, 2);
      return 2;
    }
    if (st.op == "RET" || st.op == "NOP") return 1;
    if (!vmcu::op_info(st.op)) fail(at, "unknown instruction " + st.op);
    return 1;
  }

  // ---- pass 2

  std::int64_t need(std::string_view expr, const SourceLine* at) {
    Value v = eval(expr, at, true);
    if (!v.known) fail(at, "unresolved expression");
    return v.v;
  }

  std::uint16_t imm16(std::string_view expr, const SourceLine* at) {
    const auto v = need(expr, at);
    if (v < 0 || v > 0xFFFF) fail(at, "immediate out of range");
    return static_cast<std::uint16_t>(v);
  }

  void emit(std::vector<std::uint8_t>& out, std::uint32_t offset, std::uint32_t word) {
    for (int i = 0; i < 4; ++i) out[offset + i] = static_cast<std::uint8_t>(word >> (8 * i));
  }

  void parse_mem_operand(std::string_view t, const SourceLine* at, std::uint8_t& base,
                         std::int64_t& off) {
    t = trim(t);
    if (t.size() < 3 || t.front() != '[' || t.back() != ']') fail(at, "bad memory operand");
    std::string_view in = trim(t.substr(1, t.size() - 2));
    std::size_t split = in.find_first_of(",+-");
    if (split == std::string_view::npos) {
      base = reg(in, at);
      off = 0;
      return;
    }
    base = reg(in.substr(0, split), at);
    std::string_view rest = trim(in.substr(split + 1));
    off = need(rest, at);
    if (in[split] == '-') off = -off;
    if (off < -2048 || off > 2047) fail(at, "offset out of range");
  }

  void encode_instruction(const Statement& st, std::vector<std::uint8_t>& code) {
    const SourceLine* at = st.src;
    const std::uint32_t pc = base_ + st.offset;
    std::uint32_t off = st.offset;
    auto put = [&](const Instruction& ins) {
      emit(code, off, vmcu::encode(ins));
      off += 4;
    };

    if (st.op == "RET") {
      if (!st.args.empty()) fail(at, "RET takes no operands");
      put({Opcode::Bx, 0, 14, 0});
      return;
    }
    if (st.op == "NOP") {
      if (!st.args.empty()) fail(at, "NOP takes no operands");
      put({Opcode::Mov, 0, 0, 0});
      return;
    }
    if (st.op == "LI") {
      const std::uint8_t rd = reg(st.args[0], at);
      const auto v = need(st.args[1], at);
      if (v < -0x8000'0000LL || v > 0xFFFF'FFFFLL) fail(at, "immediate out of range");
      const auto u = static_cast<std::uint32_t>(v);
      if (!st.wide) {
        put(vmcu::make_rd_imm(Opcode::Movi, rd, static_cast<std::uint16_t>(u)));
        return;
      }
      put(vmcu::make_rd_imm(Opcode::Movi, rd, static_cast<std::uint16_t>(u >> 16)));
      put(vmcu::make_rd_imm(Opcode::Movi, 12, 16));
      put(vmcu::make_rrr(Opcode::Shl, rd, rd, 12));
      put(vmcu::make_rd_imm(Opcode::Movi, 12, static_cast<std::uint16_t>(u & 0xFFFF)));
      put(vmcu::make_rrr(Opcode::Or, rd, rd, 12));
      return;
    }
    if (st.op == "LA") {
      const std::uint8_t rd = reg(st.args[0], at);
      const auto v = need(st.args[1], at) - base_;
      if (v < 0 || v > 0xFFFF) fail(at, "LA target out of range of the image base");
      put(vmcu::make_rd_imm(Opcode::Movi, 12, static_cast<std::uint16_t>(v)));
      put(vmcu::make_rrr(Opcode::Add, rd, 9, 12));
      return;
    }

    const auto info = *vmcu::op_info(st.op);
    switch (info.format) {
      case Format::RdImm:
        expect_args(st, 2);
        put(vmcu::make_rd_imm(info.op, reg(st.args[0], at), imm16(st.args[1], at)));
        break;
      case Format::RdRs:
        expect_args(st, 2);
        put({info.op, reg(st.args[0], at), reg(st.args[1], at), 0});
        break;
      case Format::RdRsRs:
        expect_args(st, 3);
        put(vmcu::make_rrr(info.op, reg(st.args[0], at), reg(st.args[1], at),
                           reg(st.args[2], at)));
        break;
      case Format::Mem: {
        expect_args(st, 2);
        std::uint8_t base = 0;
        std::int64_t o = 0;
        parse_mem_operand(st.args[1], at, base, o);
        put(vmcu::make_mem(info.op, reg(st.args[0], at), base, static_cast<std::int32_t>(o)));
        break;
      }
      case Format::RsRs:
        expect_args(st, 2);
        put(vmcu::make_rrr(info.op, 0, reg(st.args[0], at), reg(st.args[1], at)));
        break;
      case Format::Branch: {
        expect_args(st, 1);
        const auto target = need(st.args[0], at);
        const std::int64_t delta = target - (static_cast<std::int64_t>(pc) + 4);
        if (delta % 4 != 0) fail(at, "branch target not word aligned");
        const std::int64_t words = delta / 4;
        if (words < -32767 || words > 32767) fail(at, "immediate out of range");
        put(vmcu::make_branch(info.op, static_cast<std::int32_t>(words)));
        break;
      }
      case Format::Rs:
        expect_args(st, 1);
        put({info.op, 0, reg(st.args[0], at), 0});
        break;
      case Format::Rd:
        expect_args(st, 1);
        put({info.op, reg(st.args[0], at), 0, 0});
        break;
      case Format::Imm8: {
        expect_args(st, 1);
        const auto n = need(st.args[0], at);
        if (n < 0 || n > 255) fail(at, "immediate out of range");
        put(vmcu::make_svc(static_cast<std::uint8_t>(n)));
        break;
      }
      case Format::None:
        if (!st.args.empty()) fail(at, st.op + " takes no operands");
        put({info.op, 0, 0, 0});
        break;
    }
  }

  Assembly pass2() {
    std::vector<std::uint8_t> code(code_size_, 0);
    std::vector<std::uint8_t> data(data_aligned_, 0);
    for (const auto& st : stmts_) {
      const SourceLine* at = st.src;
      auto& out = st.section == Section::Data ? data : code;
      if (st.op == ".WORD") {
        for (std::size_t i = 0; i < st.args.size(); ++i) {
          const auto v = need(st.args[i], at);
          if (v < -0x8000'0000LL || v > 0xFFFF'FFFFLL) fail(at, "immediate out of range");
          emit(out, st.offset + static_cast<std::uint32_t>(4 * i), static_cast<std::uint32_t>(v));
        }
      } else if (st.op == ".ASCII" || st.op == ".ASCIZ") {
        const std::string bytes = unescape(
            std::string_view(st.args[0]).substr(1, st.args[0].size() - 2), at);
        std::copy(bytes.begin(), bytes.end(), out.begin() + st.offset);
      } else if (st.op == ".EQU") {
        if (!eval_equ(st.args[0], true).known) fail(at, "unresolved expression");
      } else if (st.op.front() != '.') {
        encode_instruction(st, code);
      }
    }

    Assembly result;
    AppBinary& bin = result.binary;
    bin.code = std::move(code);
    bin.data = std::move(data);
    bin.header.bss_size = bss_size_;
    if (stack_stmt_ != nullptr) {
      const auto words = need(stack_stmt_->args[0], stack_stmt_->src);
      if (words <= 0 || words > 0x10000) fail(stack_stmt_->src, "malformed directive .stack");
      bin.header.min_stack = static_cast<std::uint32_t>(words);
    }
    std::uint32_t entry = 0;
    for (const char* name : {"_start", "main"}) {
      if (auto it = label_pos_.find(name); it != label_pos_.end() && it->second.first == Section::Text) {
        entry = it->second.second;
        break;
      }
    }
    if (code_size_ == 0) fail(nullptr, "empty program");
    bin.header.entry = entry;
    bin.finalize();
    for (const auto& [name, v] : symbols_) result.symbols[name] = static_cast<std::uint32_t>(v);
    for (auto& [name, e] : equs_) {
      if (e.resolved) result.symbols[name] = static_cast<std::uint32_t>(e.value);
    }
    return result;
  }

  struct Equ {
    std::string expr;
    const SourceLine* at = nullptr;
    bool resolved = false;
    bool visiting = false;
    std::int64_t value = 0;
  };

  const AsmSource& src_;
  std::uint32_t base_;
  std::vector<Statement> stmts_;
  std::vector<std::string> trailing_labels_;
  std::vector<const SourceLine*> label_lines_;
  std::map<std::string, std::pair<Section, std::uint32_t>> label_pos_;
  std::map<std::string, std::int64_t> symbols_;
  std::map<std::string, Equ> equs_;
  std::set<std::string> known_names_;
  std::set<std::string> equ_names_;
  const Statement* stack_stmt_ = nullptr;
  std::uint32_t text_size_ = 0;
  std::uint32_t data_size_ = 0;
  std::uint32_t bss_size_ = 0;
  std::uint32_t code_size_ = 0;
  std::uint32_t data_aligned_ = 0;
};

}  // namespace

Assembly assemble_with_symbols(const AsmSource& src, std::uint32_t load_base) {
  return Assembler(src, load_base).run();
}

AppBinary assemble(const AsmSource& src, std::uint32_t load_base) {
  return assemble_with_symbols(src, load_base).binary;
}

// ---------------------------------------------------------- disassembler

namespace {

bool canonical(const Instruction& in) {
  const auto info = *vmcu::op_info(static_cast<std::uint8_t>(in.op));
  const bool store = in.op == Opcode::Str || in.op == Opcode::Strb;
  switch (info.format) {
    case Format::RdImm: return in.rs1 == 0;
    case Format::RdRs: return in.imm == 0;
    case Format::RdRsRs: return (in.imm & 0x0FFF) == 0;
    case Format::Mem: return store ? in.rd == 0 : (in.imm >> 12) == 0;
    case Format::RsRs: return in.rd == 0 && (in.imm & 0x0FFF) == 0;
    case Format::Branch: return in.rd == 0 && in.rs1 == 0;
    case Format::Rs: return in.rd == 0 && in.imm == 0;
    case Format::Rd: return in.rs1 == 0 && in.imm == 0;
    case Format::Imm8: return in.rd == 0 && in.rs1 == 0 && in.imm < 256;
    case Format::None: return in.rd == 0 && in.rs1 == 0 && in.imm == 0;
  }
  return false;
}

std::string hex_word(std::uint32_t w) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", w);
  return buf;
}

std::string label_for(std::uint32_t off) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "L_%04X", off);
  return buf;
}

}  // namespace

AsmSource disassemble(const AppBinary& bin) {
  const auto& code = bin.code;
  if (code.size() % 4 != 0 || bin.header.code_size != code.size() ||
      bin.header.data_size != bin.data.size())
    throw FormatError("inconsistent binary");
  auto word_at = [&](std::size_t off) {
    return std::uint32_t{code[off]} | std::uint32_t{code[off + 1]} << 8 |
           std::uint32_t{code[off + 2]} << 16 | std::uint32_t{code[off + 3]} << 24;
  };

  // Branch targets that land inside the code get synthesized labels.
  std::set<std::uint32_t> targets;
  std::map<std::uint32_t, std::uint32_t> branch_target;
  for (std::uint32_t off = 0; off < code.size(); off += 4) {
    auto ins = vmcu::decode(word_at(off));
    if (!ins || !canonical(*ins)) continue;
    if (vmcu::op_info(static_cast<std::uint8_t>(ins->op))->format != Format::Branch) continue;
    const std::int64_t t = std::int64_t{off} + 4 + std::int64_t{ins->branch_offset()} * 4;
    if (t < 0 || t > static_cast<std::int64_t>(code.size())) continue;
    targets.insert(static_cast<std::uint32_t>(t));
    branch_target[off] = static_cast<std::uint32_t>(t);
  }

  std::ostringstream os;
  os << "; disassembly\n";
  for (std::uint32_t off = 0; off <= code.size(); off += 4) {
    if (off == bin.header.entry) os << "_start:\n";
    if (targets.contains(off)) os << label_for(off) << ":\n";
    if (off == code.size()) break;
    const std::uint32_t w = word_at(off);
    auto ins = vmcu::decode(w);
    if (!ins || !canonical(*ins)) {
      os << "    .word " << hex_word(w) << '\n';
      continue;
    }
    if (auto it = branch_target.find(off); it != branch_target.end()) {
      os << "    " << vmcu::op_info(static_cast<std::uint8_t>(ins->op))->mnemonic << ' '
         << label_for(it->second) << '\n';
    } else if (vmcu::op_info(static_cast<std::uint8_t>(ins->op))->format == Format::Branch) {
      os << "    .word " << hex_word(w) << '\n';
    } else {
      os << "    " << vmcu::to_string(*ins) << '\n';
    }
  }
  if (!bin.data.empty()) {
    os << ".data\n";
    std::size_t i = 0;
    for (; i + 4 <= bin.data.size(); i += 4) {
      const std::uint32_t w = std::uint32_t{bin.data[i]} | std::uint32_t{bin.data[i + 1]} << 8 |
                              std::uint32_t{bin.data[i + 2]} << 16 |
                              std::uint32_t{bin.data[i + 3]} << 24;
      os << "    .word " << hex_word(w) << '\n';
    }
    if (i < bin.data.size()) {
      os << "    .ascii \"";
      for (; i < bin.data.size(); ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "\\x%02X", bin.data[i]);
        os << buf;
      }
      os << "\"\n";
    }
  }
  if (bin.header.bss_size > 0) os << "    .bss " << bin.header.bss_size << '\n';
  os << "    .stack " << bin.header.min_stack << '\n';
  return AsmSource::from_text(os.str(), "<disassembly>");
}

// --------------------------------------------------------------- minilib

std::span<const abi::SyscallEntry> minilib_symbols() { return abi::kSyscalls; }

std::optional<std::uint8_t> minilib_lookup(std::string_view name) {
  return abi::syscall_number(name);
}

AsmSource minilib_prelude() {
  std::ostringstream os;
  os << "; minilib: start-up stub and syscall wrappers (args r0-r3, result r0)\n";
  os << "_start:\n    BL main\n    SVC #0\n";
  for (const auto& e : abi::kSyscalls) {
    os << e.name << ":\n    SVC #" << unsigned{e.number} << "\n    RET\n";
  }
  AsmSource src = AsmSource::from_text(os.str(), "<minilib>");
  src.append(AsmSource::from_text(samples::source("minilib"), "minilib.gs"));
  return src;
}

AppBinary build_app(const AsmSource& user, std::uint32_t load_base) {
  AsmSource src = minilib_prelude();
  src.append(user);
  return assemble(src, load_base);
}

}  // namespace minios::gasm
