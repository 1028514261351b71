#include <sstream>

#include "skyherd/errors.hpp"
#include "skyherd/harness.hpp"

namespace skyherd {

namespace {

constexpr std::array<char, kCellStateCount> kAsciiGlyph{'.', ':', 'o', 'T', 'F', 'S'};

std::size_t cell_index(const EpisodeConfig& c, GridPos p) {
  return static_cast<std::size_t>(p.row) * static_cast<std::size_t>(c.width) +
         static_cast<std::size_t>(p.col);
}

void promote(std::vector<CellState>& cells, std::size_t i, CellState s) {
  if (static_cast<int>(s) > static_cast<int>(cells[i])) cells[i] = s;
}

struct Arrow {
  GridPos at;
  Action direction;
};

std::vector<Arrow> arrows(const MissionRecord& record, int interval) {
  std::vector<Arrow> out;
  if (interval <= 0) return out;
  for (const auto& s : record.steps) {
    if (s.step % interval == 0) out.push_back({s.agent, s.action});
  }
  return out;
}

std::string hex(const Rgb& c) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s = "#";
  for (auto v : {c.r, c.g, c.b}) {
    s += kDigits[v >> 4];
    s += kDigits[v & 15];
  }
  return s;
}

char arrow_glyph(Action a) {
  switch (a) {
    case Action::N: return '^';
    case Action::W: return '<';
    case Action::S: return 'v';
    case Action::E: return '>';
  }
  return '?';
}

std::string render_ascii(const MissionRecord& record, const RenderSpec& spec) {
  const auto& c = record.config;
  const auto cells = classify_cells(record);
  std::vector<char> glyphs;
  for (auto s : cells) glyphs.push_back(kAsciiGlyph[static_cast<std::size_t>(s)]);
  for (const auto& a : arrows(record, spec.arrow_interval)) {
    const auto i = cell_index(c, a.at);
    if (cells[i] == CellState::visited) glyphs[i] = arrow_glyph(a.direction);
  }
  std::string out;
  for (int r = 0; r < c.height; ++r) {
    for (int col = 0; col < c.width; ++col) out += glyphs[cell_index(c, {r, col})];
    out += '\n';
  }
  return out;
}

// Arrow as a line from the cell centre towards the neighbour, with a head.
std::string render_svg(const MissionRecord& record, const RenderSpec& spec) {
  const auto& c = record.config;
  const int px = spec.cell_pixels;
  const auto cells = classify_cells(record);
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << c.width * px << "\" height=\""
      << c.height * px << "\" viewBox=\"0 0 " << c.width * px << ' ' << c.height * px << "\">\n";
  for (int r = 0; r < c.height; ++r) {
    for (int col = 0; col < c.width; ++col) {
      const auto s = cells[cell_index(c, {r, col})];
      out << "<rect x=\"" << col * px << "\" y=\"" << r * px << "\" width=\"" << px
          << "\" height=\"" << px << "\" fill=\"" << hex(spec.colours[static_cast<std::size_t>(s)])
          << "\"/>\n";
    }
  }
  const std::string stroke = hex(spec.arrow);
  for (const auto& a : arrows(record, spec.arrow_interval)) {
    const GridPos to = displaced(a.at, a.direction);
    const double x1 = (a.at.col + 0.5) * px;
    const double y1 = (a.at.row + 0.5) * px;
    const double x2 = (to.col + 0.5) * px;
    const double y2 = (to.row + 0.5) * px;
    out << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
        << "\" stroke=\"" << stroke << "\" stroke-width=\"2\"/>\n";
    out << "<circle cx=\"" << x2 << "\" cy=\"" << y2 << "\" r=\"" << px / 6.0 << "\" fill=\""
        << stroke << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_ppm(const MissionRecord& record, const RenderSpec& spec) {
  const auto& c = record.config;
  const int px = spec.cell_pixels;
  const int w = c.width * px;
  const int h = c.height * px;
  const auto cells = classify_cells(record);
  std::vector<Rgb> image(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  auto put = [&](int x, int y, Rgb colour) {
    if (x >= 0 && x < w && y >= 0 && y < h) {
      image[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = colour;
    }
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      put(x, y, spec.colours[static_cast<std::size_t>(cells[cell_index(c, {y / px, x / px})])]);
    }
  }
  for (const auto& a : arrows(record, spec.arrow_interval)) {
    const GridPos d = displaced({0, 0}, a.direction);
    const int cx = a.at.col * px + px / 2;
    const int cy = a.at.row * px + px / 2;
    for (int t = 0; t <= px; ++t) put(cx + d.col * t, cy + d.row * t, spec.arrow);
    // Square head at the tip.
    const int tx = cx + d.col * px;
    const int ty = cy + d.row * px;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) put(tx + dx, ty + dy, spec.arrow);
    }
  }
  std::string out = "P6\n" + std::to_string(w) + ' ' + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + image.size() * 3);
  for (const auto& p : image) {
    out += static_cast<char>(p.r);
    out += static_cast<char>(p.g);
    out += static_cast<char>(p.b);
  }
  return out;
}

}  // namespace

void RenderSpec::validate() const {
  if (arrow_interval < 0) throw ConfigError("arrow interval must be >= 0");
  if (cell_pixels < 1 || cell_pixels > 256) throw ConfigError("cell pixels must lie in [1, 256]");
}

RenderFormat parse_render_format(const std::string& name) {
  if (name == "ascii") return RenderFormat::ascii;
  if (name == "svg") return RenderFormat::svg;
  if (name == "ppm") return RenderFormat::ppm;
  throw UsageError("unsupported render format '" + name + "' (ascii, svg, ppm)");
}

std::vector<CellState> classify_cells(const MissionRecord& record) {
  const auto& c = record.config;
  std::vector<CellState> cells(static_cast<std::size_t>(c.cells()), CellState::unvisited);
  const int h = c.sense_half_width;
  for (const GridPos p : record.path()) {
    for (int dr = -h; dr <= h; ++dr) {
      for (int dc = -h; dc <= h; ++dc) {
        const GridPos q{p.row + dr, p.col + dc};
        if (c.in_bounds(q)) promote(cells, cell_index(c, q), CellState::seen);
      }
    }
    promote(cells, cell_index(c, p), CellState::visited);
  }
  for (const auto& s : record.steps) {
    if (s.recoveries > 0) promote(cells, cell_index(c, displaced(s.agent, s.action)), CellState::target);
  }
  promote(cells, cell_index(c, record.final_agent), CellState::finish);
  promote(cells, cell_index(c, c.start), CellState::start);
  return cells;
}

std::string render(const MissionRecord& record, const RenderSpec& spec, RenderFormat format) {
  spec.validate();
  switch (format) {
    case RenderFormat::ascii: return render_ascii(record, spec);
    case RenderFormat::svg: return render_svg(record, spec);
    case RenderFormat::ppm: return render_ppm(record, spec);
  }
  throw UsageError("unsupported render format");
}

}  // namespace skyherd
