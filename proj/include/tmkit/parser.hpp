#pragma once

// Textual TM DSL: recursive-descent parser with error recovery, and the
// canonical serializer. Grammar summary:
//
//   model     := "model" IDENT "{" item* "}"
//   item      := thimac | flow | trigger | event | behavior
//   thimac    := "thimac" IDENT STRING? "{" (stage | thimac)* "}"
//   stage     := "stage" KIND DIR? ("cost" INT)? ("@" INT)?
//   flow      := "flow" PATH "->" PATH STRING? ("@" INT)?
//   trigger   := "trigger" PATH "~>" PATH STRING? ("@" INT)?
//   event     := "event" IDENT STRING? "{" "region" "[" (PATH ("," PATH)*)? "]"
//                ("order" INT)? ("duration" INT)? "}"
//   behavior  := "behavior" IDENT "->" IDENT
//   PATH      := IDENT ("." IDENT)* "." KIND ("." DIR)?
//
// `#` starts a comment running to end of line.

#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tmkit/model.hpp"

namespace tmkit {

struct SourceSpan {
  std::string file;
  int line = 1;
  int column = 1;

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

enum class Severity : std::uint8_t { error, warning };

inline constexpr std::string_view to_string(Severity s) noexcept {
  return s == Severity::error ? "error" : "warning";
}

struct ParseDiagnostic {
  Severity severity = Severity::error;
  std::string message;
  SourceSpan span;

  friend bool operator==(const ParseDiagnostic&, const ParseDiagnostic&) = default;
};

inline std::string format(const ParseDiagnostic& d) {
  std::ostringstream os;
  os << d.span.file << ':' << d.span.line << ':' << d.span.column << ": "
     << to_string(d.severity) << ": " << d.message;
  return os.str();
}

struct ParseResult {
  std::optional<Model> model;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const noexcept {
    if (!model) return false;
    for (const auto& d : diagnostics)
      if (d.severity == Severity::error) return false;
    return true;
  }
  std::size_t warning_count() const noexcept {
    std::size_t n = 0;
    for (const auto& d : diagnostics) n += d.severity == Severity::warning;
    return n;
  }
};

namespace detail {

enum class Tok : std::uint8_t {
  ident, integer, string, lbrace, rbrace, lbracket, rbracket, comma, dot, arrow, squiggle, at,
  end, bad,
};

struct Token {
  Tok kind = Tok::end;
  std::string text;
  int line = 1;
  int column = 1;
};

inline const char* describe(Tok t) {
  switch (t) {
    case Tok::ident: return "identifier";
    case Tok::integer: return "integer";
    case Tok::string: return "string";
    case Tok::lbrace: return "'{'";
    case Tok::rbrace: return "'}'";
    case Tok::lbracket: return "'['";
    case Tok::rbracket: return "']'";
    case Tok::comma: return "','";
    case Tok::dot: return "'.'";
    case Tok::arrow: return "'->'";
    case Tok::squiggle: return "'~>'";
    case Tok::at: return "'@'";
    case Tok::end: return "end of input";
    case Tok::bad: return "invalid character";
  }
  return "?";
}

class Lexer {
 public:
  Lexer(std::string_view src, std::string file, std::vector<ParseDiagnostic>& diags)
      : src_(src), file_(std::move(file)), diags_(diags) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::end;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::ident;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          t.text += take();
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Tok::integer;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
          t.text += take();
      } else if (c == '"') {
        t.kind = Tok::string;
        lex_string(t);
      } else if (c == '-' && peek(1) == '>') {
        t.kind = Tok::arrow;
        take(), take();
      } else if (c == '~' && peek(1) == '>') {
        t.kind = Tok::squiggle;
        take(), take();
      } else {
        take();
        switch (c) {
          case '{': t.kind = Tok::lbrace; break;
          case '}': t.kind = Tok::rbrace; break;
          case '[': t.kind = Tok::lbracket; break;
          case ']': t.kind = Tok::rbracket; break;
          case ',': t.kind = Tok::comma; break;
          case '.': t.kind = Tok::dot; break;
          case '@': t.kind = Tok::at; break;
          default:
            t.kind = Tok::bad;
            t.text = std::string(1, c);
            diags_.push_back({Severity::error, std::string("unexpected character '") + c + "'",
                              {file_, t.line, t.column}});
            continue;
        }
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char peek(std::size_t ahead) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  char take() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') take();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        take();
      } else {
        return;
      }
    }
  }

  void lex_string(Token& t) {
    take();  // opening quote
    for (;;) {
      if (pos_ >= src_.size() || src_[pos_] == '\n') {
        diags_.push_back({Severity::error, "unterminated string", {file_, t.line, t.column}});
        return;
      }
      char c = take();
      if (c == '"') return;
      if (c == '\\' && pos_ < src_.size()) {
        char e = take();
        switch (e) {
          case 'n': t.text += '\n'; break;
          case 't': t.text += '\t'; break;
          case '"': t.text += '"'; break;
          case '\\': t.text += '\\'; break;
          default:
            diags_.push_back({Severity::error, std::string("unknown escape '\\") + e + "'",
                              {file_, line_, col_ - 2}});
        }
        continue;
      }
      t.text += c;
    }
  }

  std::string_view src_;
  std::string file_;
  std::vector<ParseDiagnostic>& diags_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct PathRef {
  std::string text;
  SourceSpan span;
};

struct ThimacItem {
  SourceSpan span;
  std::string parent;  // empty at top level
  std::string id;
  std::string display;
  bool parent_ok = true;
};

struct StageItem {
  SourceSpan span;
  std::string thimac;
  ActionKind kind = ActionKind::create;
  Direction dir = Direction::none;
  std::uint32_t cost = 1;
  std::optional<int> annotation;
  SourceSpan annotation_span;
};

struct ArrowItem {
  bool trigger = false;
  PathRef from;
  PathRef to;
  std::optional<std::string> label;
  std::optional<int> annotation;
  SourceSpan annotation_span;
};

struct EventItem {
  SourceSpan span;
  Event event;
  SourceSpan order_span;
};

struct BehaviorItem {
  SourceSpan span;
  BehaviorEdge edge;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::string file, std::vector<ParseDiagnostic>& diags)
      : toks_(std::move(toks)), file_(std::move(file)), diags_(diags) {}

  std::optional<Model> run() {
    if (!expect_keyword("model")) return std::nullopt;
    auto name = expect(Tok::ident, "model name");
    if (!name) return std::nullopt;
    if (!expect(Tok::lbrace, "'{' after model name")) return std::nullopt;
    while (!at(Tok::rbrace) && !at(Tok::end)) item();
    if (!expect(Tok::rbrace, "'}' closing the model")) return std::nullopt;
    if (!at(Tok::end)) error(cur(), "unexpected trailing input");
    return assemble(name->text);
  }

 private:
  // ---- token helpers
  const Token& cur() const { return toks_[pos_]; }
  bool at(Tok k) const { return cur().kind == k; }
  bool at_keyword(std::string_view kw) const { return at(Tok::ident) && cur().text == kw; }
  SourceSpan span(const Token& t) const { return {file_, t.line, t.column}; }
  Token advance() { return pos_ + 1 < toks_.size() ? toks_[pos_++] : toks_[pos_]; }

  void error(const Token& t, std::string msg) {
    diags_.push_back({Severity::error, std::move(msg), span(t)});
  }
  void error(const SourceSpan& s, std::string msg) {
    diags_.push_back({Severity::error, std::move(msg), s});
  }

  std::optional<Token> expect(Tok k, std::string_view what) {
    if (at(k)) return advance();
    error(cur(), "expected " + std::string(what) + ", found " + found());
    return std::nullopt;
  }

  bool expect_keyword(std::string_view kw) {
    if (at_keyword(kw)) {
      advance();
      return true;
    }
    error(cur(), "expected '" + std::string(kw) + "', found " + found());
    return false;
  }

  std::string found() const {
    if (at(Tok::ident)) return "'" + cur().text + "'";
    return describe(cur().kind);
  }

  bool at_item_start() const {
    return at_keyword("thimac") || at_keyword("flow") || at_keyword("trigger") ||
           at_keyword("event") || at_keyword("behavior") || at_keyword("stage");
  }

  // Skips to the next item keyword or closing brace at the current depth.
  void recover() {
    int depth = 0;
    while (!at(Tok::end)) {
      if (depth == 0 && (at_item_start() || at(Tok::rbrace))) return;
      if (at(Tok::lbrace)) ++depth;
      if (at(Tok::rbrace)) --depth;
      advance();
    }
  }

  std::optional<int> integer(std::string_view what) {
    auto t = expect(Tok::integer, what);
    if (!t) return std::nullopt;
    int v = 0;
    auto [p, ec] = std::from_chars(t->text.data(), t->text.data() + t->text.size(), v);
    if (ec != std::errc{} || v <= 0) {
      error(*t, std::string(what) + " must be a positive integer");
      return std::nullopt;
    }
    return v;
  }

  // ---- grammar
  void item() {
    if (at_keyword("thimac")) return thimac("", true);
    if (at_keyword("flow")) return arrow(false);
    if (at_keyword("trigger")) return arrow(true);
    if (at_keyword("event")) return event();
    if (at_keyword("behavior")) return behavior();
    error(cur(), "expected thimac, flow, trigger, event or behavior, found " + found());
    advance();
    recover();
  }

  void thimac(const std::string& parent, bool parent_ok) {
    auto kw = advance();
    auto name = expect(Tok::ident, "thimac name");
    if (!name) return recover();
    if (parse_action_kind(name->text)) {
      error(*name, "'" + name->text + "' is an action kind and cannot name a thimac");
      parent_ok = false;
    }
    ThimacItem item{span(kw), parent, name->text, {}, parent_ok};
    if (at(Tok::string)) item.display = advance().text;
    if (!expect(Tok::lbrace, "'{' opening thimac body")) return recover();
    std::string path = parent.empty() ? name->text : parent + '.' + name->text;
    thimacs_.push_back(item);
    std::size_t self = thimacs_.size() - 1;
    bool empty = true;
    while (!at(Tok::rbrace) && !at(Tok::end)) {
      empty = false;
      if (at_keyword("stage")) {
        stage(path);
      } else if (at_keyword("thimac")) {
        thimac(path, parent_ok);
      } else {
        error(cur(), "expected stage or thimac inside thimac body, found " + found());
        advance();
        recover();
        if (at_keyword("flow") || at_keyword("trigger") || at_keyword("event") ||
            at_keyword("behavior"))
          break;
      }
    }
    if (!expect(Tok::rbrace, "'}' closing thimac " + name->text)) return;
    if (empty)
      diags_.push_back({Severity::warning, "thimac " + path + " declares no stages or children",
                        thimacs_[self].span});
  }

  void stage(const std::string& owner) {
    auto kw = advance();
    StageItem s;
    s.span = span(kw);
    s.thimac = owner;
    auto kind = expect(Tok::ident, "stage kind");
    if (!kind) return recover();
    auto k = parse_action_kind(kind->text);
    if (!k) {
      error(*kind, "unknown stage kind '" + kind->text + "'");
      return recover();
    }
    s.kind = *k;
    if (at(Tok::ident)) {
      if (auto d = parse_direction(cur().text)) {
        s.dir = *d;
        advance();
      }
    }
    bool dir_ok = (s.kind == ActionKind::transfer) == (s.dir != Direction::none);
    if (!dir_ok) {
      error(s.span, s.kind == ActionKind::transfer ? "transfer stage needs a direction (in/out)"
                                                   : "only transfer stages take a direction");
    }
    if (at_keyword("cost")) {
      advance();
      auto c = integer("stage cost");
      if (!c) return recover();
      s.cost = static_cast<std::uint32_t>(*c);
    }
    if (at(Tok::at)) {
      s.annotation_span = span(advance());
      s.annotation = integer("annotation label");
      if (!s.annotation) return recover();
    }
    if (dir_ok) stages_.push_back(std::move(s));
  }

  std::optional<PathRef> path() {
    PathRef p;
    p.span = span(cur());
    auto first = expect(Tok::ident, "stage path");
    if (!first) return std::nullopt;
    std::vector<std::string> parts{first->text};
    while (at(Tok::dot)) {
      advance();
      auto part = expect(Tok::ident, "path component");
      if (!part) return std::nullopt;
      parts.push_back(part->text);
    }
    // Thimac components, then a kind, then an optional direction.
    std::size_t k = 0;
    while (k < parts.size() && !parse_action_kind(parts[k])) ++k;
    if (k == 0 || k == parts.size()) {
      error(p.span, "path must name thimac(s) followed by a stage kind");
      return std::nullopt;
    }
    auto kind = *parse_action_kind(parts[k]);
    std::size_t rest = parts.size() - k - 1;
    if (kind == ActionKind::transfer) {
      if (rest != 1 || !parse_direction(parts[k + 1])) {
        error(p.span, "transfer path must end in .in or .out");
        return std::nullopt;
      }
    } else if (rest != 0) {
      error(p.span, "unexpected components after stage kind '" + parts[k] + "'");
      return std::nullopt;
    }
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) p.text += '.';
      p.text += parts[i];
    }
    return p;
  }

  void arrow(bool trigger) {
    advance();
    ArrowItem a;
    a.trigger = trigger;
    auto from = path();
    if (!from) return recover();
    if (!expect(trigger ? Tok::squiggle : Tok::arrow, trigger ? "'~>'" : "'->'"))
      return recover();
    auto to = path();
    if (!to) return recover();
    a.from = std::move(*from);
    a.to = std::move(*to);
    if (at(Tok::string)) a.label = advance().text;
    if (at(Tok::at)) {
      a.annotation_span = span(advance());
      a.annotation = integer("annotation label");
      if (!a.annotation) return recover();
    }
    arrows_.push_back(std::move(a));
  }

  void event() {
    auto kw = advance();
    EventItem e{span(kw), {}, {}};
    auto id = expect(Tok::ident, "event id");
    if (!id) return recover();
    e.event.id = id->text;
    if (at(Tok::string)) e.event.description = advance().text;
    if (!expect(Tok::lbrace, "'{' opening event body")) return recover();
    if (!expect_keyword("region")) return recover();
    if (!expect(Tok::lbracket, "'[' opening region")) return recover();
    if (!at(Tok::rbracket)) {
      for (;;) {
        auto p = path();
        if (!p) return recover();
        e.event.region.push_back(p->text);
        if (!at(Tok::comma)) break;
        advance();
      }
    }
    if (!expect(Tok::rbracket, "']' closing region")) return recover();
    if (at_keyword("order")) {
      e.order_span = span(advance());
      auto v = integer("event order");
      if (!v) return recover();
      e.event.time.declared_order = static_cast<std::uint32_t>(*v);
    }
    if (at_keyword("duration")) {
      advance();
      auto v = integer("event duration");
      if (!v) return recover();
      e.event.time.duration_hint = static_cast<std::uint32_t>(*v);
    }
    if (!expect(Tok::rbrace, "'}' closing event " + e.event.id)) return recover();
    events_.push_back(std::move(e));
  }

  void behavior() {
    auto kw = advance();
    auto from = expect(Tok::ident, "event id");
    if (!from) return recover();
    if (!expect(Tok::arrow, "'->'")) return recover();
    auto to = expect(Tok::ident, "event id");
    if (!to) return recover();
    behaviors_.push_back({span(kw), {from->text, to->text}});
  }

  // ---- semantic assembly
  std::optional<Model> assemble(const std::string& name) {
    ModelBuilder b(name);
    std::set<std::string> bad_thimacs;
    for (const auto& t : thimacs_) {
      std::string path = t.parent.empty() ? t.id : t.parent + '.' + t.id;
      if (!t.parent_ok || (!t.parent.empty() && bad_thimacs.count(t.parent))) {
        bad_thimacs.insert(path);
        continue;
      }
      try {
        b.add_thimac(ThimacDecl{t.parent, t.id, t.display});
      } catch (const BuildError& e) {
        bad_thimacs.insert(path);
        error(t.span, e.code() == BuildErrc::duplicate_id
                          ? "duplicate thimac '" + path + "' in the same scope"
                          : e.what());
      }
    }
    std::map<int, SourceSpan> labels;
    auto claim = [&](const std::optional<int>& a, const SourceSpan& s) {
      if (!a) return true;
      auto [it, fresh] = labels.emplace(*a, s);
      if (!fresh) {
        error(s, "annotation @" + std::to_string(*a) + " already bound at line " +
                     std::to_string(it->second.line));
        return false;
      }
      return true;
    };
    for (const auto& s : stages_) {
      if (bad_thimacs.count(s.thimac)) continue;
      if (!claim(s.annotation, s.annotation_span)) continue;
      try {
        b.add_stage(StageDecl{s.thimac, s.kind, s.dir, s.cost, s.annotation});
      } catch (const BuildError& e) {
        error(s.span, e.code() == BuildErrc::duplicate_stage_kind
                          ? "duplicate stage kind: " + s.thimac + '.' +
                                detail::stage_suffix(s.kind, s.dir)
                          : std::string(e.what()));
      }
    }
    for (const auto& a : arrows_) {
      bool ok = true;
      for (const auto* p : {&a.from, &a.to}) {
        if (!b.stage_at(p->text)) {
          error(p->span, "unknown stage '" + p->text + "'");
          ok = false;
        }
      }
      if (!ok) continue;
      if (!a.trigger && a.from.text == a.to.text) {
        error(a.from.span, "flow from a stage to itself");
        continue;
      }
      if (!claim(a.annotation, a.annotation_span)) continue;
      if (a.trigger)
        b.add_trigger(TriggerDecl{a.from.text, a.to.text, a.label, a.annotation});
      else
        b.add_flow(FlowDecl{a.from.text, a.to.text, a.label, a.annotation});
    }
    std::map<std::string, SourceSpan> event_ids;
    std::map<std::uint32_t, SourceSpan> orders;
    for (const auto& e : events_) {
      if (!event_ids.emplace(e.event.id, e.span).second) {
        error(e.span, "duplicate event id '" + e.event.id + "'");
        continue;
      }
      if (auto o = e.event.time.declared_order; o && !orders.emplace(*o, e.order_span).second) {
        error(e.order_span, "event order " + std::to_string(*o) + " already used");
        continue;
      }
      b.add_event(e.event);
    }
    for (const auto& be : behaviors_) b.add_behavior(be.edge);
    try {
      return b.build();
    } catch (const BuildError& e) {
      error(SourceSpan{file_, 1, 1}, e.what());
      return std::nullopt;
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::string file_;
  std::vector<ParseDiagnostic>& diags_;
  std::vector<ThimacItem> thimacs_;
  std::vector<StageItem> stages_;
  std::vector<ArrowItem> arrows_;
  std::vector<EventItem> events_;
  std::vector<BehaviorItem> behaviors_;
};

inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

}  // namespace detail

inline ParseResult parse(std::string_view source, std::string file = "<input>") {
  ParseResult r;
  detail::Lexer lex(source, file, r.diagnostics);
  auto toks = lex.run();
  detail::Parser p(std::move(toks), std::move(file), r.diagnostics);
  auto model = p.run();
  bool has_error = false;
  for (const auto& d : r.diagnostics) has_error |= d.severity == Severity::error;
  if (model && !has_error) r.model = std::move(model);
  std::stable_sort(r.diagnostics.begin(), r.diagnostics.end(),
                   [](const ParseDiagnostic& a, const ParseDiagnostic& b) {
                     return std::tie(a.span.line, a.span.column) <
                            std::tie(b.span.line, b.span.column);
                   });
  return r;
}

/// Canonical text form. Groups appear as thimacs, flows, triggers, events,
/// behavior; each group keeps declaration order.
inline std::string serialize(const Model& m) {
  std::ostringstream os;
  os << "model " << m.name() << " {\n";
  bool any = false;
  auto separate = [&](bool nonempty) {
    if (nonempty && any) os << '\n';
    any = any || nonempty;
  };

  auto annotation = [&](const std::optional<int>& a) {
    if (a) os << " @" << *a;
  };

  auto emit_thimac = [&](auto&& self, ThimacIndex ti, int depth) -> void {
    const auto& t = m.thimac(ti);
    std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    os << pad << "thimac " << t.id;
    if (!t.display_name.empty()) os << ' ' << detail::quote(t.display_name);
    os << " {\n";
    for (auto si : t.stages) {
      const auto& s = m.stage(si);
      os << pad << "  stage " << to_string(s.kind);
      if (s.direction != Direction::none) os << ' ' << to_string(s.direction);
      if (s.cost_ticks != 1) os << " cost " << s.cost_ticks;
      annotation(s.annotation);
      os << '\n';
    }
    for (auto c : t.children) self(self, c, depth + 1);
    os << pad << "}\n";
  };

  auto roots = m.roots();
  separate(!roots.empty());
  for (auto r : roots) emit_thimac(emit_thimac, r, 1);

  auto arrows = [&](const auto& list, const char* kw, const char* op) {
    separate(!list.empty());
    for (const auto& a : list) {
      os << "  " << kw << ' ' << m.stage(a.from).id << ' ' << op << ' ' << m.stage(a.to).id;
      if (a.label) os << ' ' << detail::quote(*a.label);
      annotation(a.annotation);
      os << '\n';
    }
  };
  arrows(m.flows(), "flow", "->");
  arrows(m.triggers(), "trigger", "~>");

  separate(!m.events().empty());
  for (const auto& e : m.events()) {
    os << "  event " << e.id;
    if (!e.description.empty()) os << ' ' << detail::quote(e.description);
    os << " {\n";
    if (e.region.empty()) {
      os << "    region []\n";
    } else {
      os << "    region [\n";
      for (std::size_t i = 0; i < e.region.size(); ++i)
        os << "      " << e.region[i] << (i + 1 < e.region.size() ? ",\n" : "\n");
      os << "    ]\n";
    }
    if (e.time.declared_order) os << "    order " << *e.time.declared_order << '\n';
    if (e.time.duration_hint) os << "    duration " << *e.time.duration_hint << '\n';
    os << "  }\n";
  }

  separate(!m.behavior().empty());
  for (const auto& b : m.behavior()) os << "  behavior " << b.from << " -> " << b.to << '\n';
  os << "}\n";
  return os.str();
}

}  // namespace tmkit
