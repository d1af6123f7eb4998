#include "grid/caseio.hpp"

#include <cstdlib>
#include <sstream>

namespace avc::grid {

namespace {

[[noreturn]] void fail(int line_no, const std::string& msg) {
  throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": " + msg);
}

double parse_num(const std::string& tok, int line_no) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') fail(line_no, "expected a number, got '" + tok + "'");
  return v;
}

int parse_int(const std::string& tok, int line_no) {
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0') fail(line_no, "expected an integer, got '" + tok + "'");
  return static_cast<int>(v);
}

bool parse_flag(const std::string& tok, int line_no) {
  if (tok == "1" || tok == "true") return true;
  if (tok == "0" || tok == "false") return false;
  fail(line_no, "expected 0/1 flag, got '" + tok + "'");
}

BusKind parse_kind(const std::string& tok, int line_no) {
  if (tok == "slack") return BusKind::slack;
  if (tok == "pv") return BusKind::pv;
  if (tok == "pq") return BusKind::pq;
  fail(line_no, "unknown bus kind '" + tok + "'");
}

const char* kind_name(BusKind k) {
  switch (k) {
    case BusKind::slack: return "slack";
    case BusKind::pv: return "pv";
    default: return "pq";
  }
}

}  // namespace

GridCase parse_case(const std::string& text) {
  GridCase c;
  c.base_mva = 100.0;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const auto toks = split_ws(raw);
    if (toks.empty()) continue;
    if (toks[0].front() == '[') {
      if (toks[0].back() != ']' || toks.size() != 1) fail(line_no, "malformed section header");
      section = toks[0].substr(1, toks[0].size() - 2);
      if (section != "meta" && section != "bus" && section != "branch" && section != "gen" &&
          section != "load" && section != "ltc")
        fail(line_no, "unknown section [" + section + "]");
      continue;
    }
    if (section.empty()) fail(line_no, "record before any section header");

    if (section == "meta") {
      if (toks.size() != 2) fail(line_no, "meta records are 'key value'");
      if (toks[0] == "base_mva") {
        c.base_mva = parse_num(toks[1], line_no);
      } else {
        fail(line_no, "unknown meta key '" + toks[0] + "'");
      }
    } else if (section == "bus") {
      // id kind [v_set [v_min v_max]]; '-' stands for unset v_set
      if (toks.size() < 2 || toks.size() > 5 || toks.size() == 4)
        fail(line_no, "bus records are 'id kind v_set v_min v_max'");
      Bus b;
      b.id = parse_int(toks[0], line_no);
      b.kind = parse_kind(toks[1], line_no);
      if (toks.size() >= 3 && toks[2] != "-") b.v_set = parse_num(toks[2], line_no);
      if (toks.size() == 5) {
        b.v_min = parse_num(toks[3], line_no);
        b.v_max = parse_num(toks[4], line_no);
      }
      if (b.kind != BusKind::pq && b.v_set == 0.0) fail(line_no, "slack/pv bus needs v_set");
      c.buses.push_back(b);
    } else if (section == "branch") {
      if (toks.size() != 7) fail(line_no, "branch records are 'from to r x b tap in_service'");
      Branch br;
      br.from_bus = parse_int(toks[0], line_no);
      br.to_bus = parse_int(toks[1], line_no);
      br.r = parse_num(toks[2], line_no);
      br.x = parse_num(toks[3], line_no);
      br.b = parse_num(toks[4], line_no);
      br.tap = parse_num(toks[5], line_no);
      br.in_service = parse_flag(toks[6], line_no);
      c.branches.push_back(br);
    } else if (section == "gen") {
      if (toks.size() != 4) fail(line_no, "gen records are 'bus p_set v_set controllable'");
      Generator g;
      g.bus = parse_int(toks[0], line_no);
      g.p_set = parse_num(toks[1], line_no);
      g.v_set = parse_num(toks[2], line_no);
      g.controllable = parse_flag(toks[3], line_no);
      c.generators.push_back(g);
    } else if (section == "load") {
      if (toks.size() != 3) fail(line_no, "load records are 'bus p q'");
      Load l;
      l.bus = parse_int(toks[0], line_no);
      l.p = parse_num(toks[1], line_no);
      l.q = parse_num(toks[2], line_no);
      c.loads.push_back(l);
    } else {  // ltc
      if (toks.size() != 4) fail(line_no, "ltc records are 'branch_index tap_steps step_size position'");
      LtcTransformer t;
      t.branch_index = parse_int(toks[0], line_no);
      t.tap_steps = parse_int(toks[1], line_no);
      t.step_size = parse_num(toks[2], line_no);
      t.position = parse_int(toks[3], line_no);
      c.ltcs.push_back(t);
    }
  }
  validate(c);
  return c;
}

std::string serialize_case(const GridCase& c) {
  std::ostringstream out;
  out << "[meta]\n";
  out << "base_mva " << format_double(c.base_mva) << "\n";
  out << "[bus]\n";
  for (const Bus& b : c.buses) {
    out << b.id << " " << kind_name(b.kind) << " ";
    if (b.kind == BusKind::pq && b.v_set == 0.0)
      out << "-";
    else
      out << format_double(b.v_set);
    out << " " << format_double(b.v_min) << " " << format_double(b.v_max) << "\n";
  }
  out << "[branch]\n";
  for (const Branch& br : c.branches) {
    out << br.from_bus << " " << br.to_bus << " " << format_double(br.r) << " "
        << format_double(br.x) << " " << format_double(br.b) << " " << format_double(br.tap)
        << " " << (br.in_service ? 1 : 0) << "\n";
  }
  out << "[gen]\n";
  for (const Generator& g : c.generators) {
    out << g.bus << " " << format_double(g.p_set) << " " << format_double(g.v_set) << " "
        << (g.controllable ? 1 : 0) << "\n";
  }
  out << "[load]\n";
  for (const Load& l : c.loads) {
    out << l.bus << " " << format_double(l.p) << " " << format_double(l.q) << "\n";
  }
  out << "[ltc]\n";
  for (const LtcTransformer& t : c.ltcs) {
    out << t.branch_index << " " << t.tap_steps << " " << format_double(t.step_size) << " "
        << t.position << "\n";
  }
  return out.str();
}

GridCase load_case_file(const std::string& path) {
  try {
    return parse_case(read_text_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io) throw;
    throw Error(e.code(), path + ": " + e.what());
  }
}

void save_case_file(const GridCase& c, const std::string& path) {
  write_text_file(path, serialize_case(c));
}

}  // namespace avc::grid
