#include "capflow/model_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "capflow/errors.hpp"

namespace capflow {

namespace {

double parse_double(const std::string& tok) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw FormatError("bad number '" + tok + "'");
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("bad number '" + tok + "'");
  }
}

int parse_int(const std::string& tok) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) throw FormatError("bad integer '" + tok + "'");
  return v;
}

std::vector<double> read_numbers(std::istream& in, std::size_t count, const char* what) {
  std::vector<double> out;
  out.reserve(count);
  std::string tok;
  while (out.size() < count && in >> tok) out.push_back(parse_double(tok));
  if (out.size() != count)
    throw FormatError(std::string("expected ") + std::to_string(count) + " values for " + what);
  return out;
}

// key=value attributes after the leading words of a header line.
std::map<std::string, std::string> attributes(std::istringstream& line) {
  std::map<std::string, std::string> out;
  std::string tok;
  while (line >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError("expected key=value, got '" + tok + "'");
    out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

std::string require(const std::map<std::string, std::string>& attrs, const std::string& key) {
  auto it = attrs.find(key);
  if (it == attrs.end()) throw FormatError("missing attribute " + key);
  return it->second;
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return in;
}

}  // namespace

const Field& FiniteModelFile::field(const std::string& name) const {
  for (const auto& [n, f] : fields)
    if (n == name) return f;
  throw InvalidArgument("model has no field named " + name);
}

FiniteModelFile read_finite_model(std::istream& in) {
  std::string tok;
  if (!(in >> tok) || tok != "atoms") throw FormatError("finite model must start with 'atoms <m>'");
  if (!(in >> tok)) throw FormatError("missing atom count");
  const int m = parse_int(tok);
  if (m <= 0) throw FormatError("atom count must be positive");
  FiniteModelFile model;
  model.space = MeasureSpace::make(read_numbers(in, static_cast<std::size_t>(m), "weights"));
  model.kernel = MatrixKernel::identity(static_cast<std::size_t>(m));
  while (in >> tok) {
    if (tok == "kernel") {
      if (!(in >> tok)) throw FormatError("missing kernel kind");
      if (tok == "identity") {
        model.kernel = MatrixKernel::identity(static_cast<std::size_t>(m));
      } else if (tok == "ones") {
        model.kernel = MatrixKernel::ones(static_cast<std::size_t>(m));
      } else if (tok == "matrix") {
        auto v = read_numbers(in, static_cast<std::size_t>(m) * m, "kernel matrix");
        Eigen::MatrixXd k(m, m);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j) k(i, j) = v[static_cast<std::size_t>(i) * m + j];
        model.kernel = std::make_shared<const MatrixKernel>(std::move(k));
      } else {
        throw FormatError("unknown kernel kind '" + tok + "'");
      }
    } else if (tok == "field") {
      std::string name;
      if (!(in >> name)) throw FormatError("field needs a name");
      model.fields.emplace_back(name, Field(model.space, read_numbers(in, static_cast<std::size_t>(m), "field")));
    } else {
      throw FormatError("unexpected token '" + tok + "'");
    }
  }
  return model;
}

FiniteModelFile load_finite_model(const std::string& path) {
  auto in = open(path);
  return read_finite_model(in);
}

void write_finite_model(std::ostream& out, const FiniteModelFile& model) {
  const auto m = model.space->size();
  out << std::setprecision(17) << "atoms " << m << "\n";
  for (std::size_t i = 0; i < m; ++i) out << (i ? " " : "") << model.space->weight(i);
  out << "\n";
  if (model.kernel) {
    out << "kernel matrix\n";
    const auto& k = model.kernel->matrix();
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      for (Eigen::Index j = 0; j < k.cols(); ++j) out << (j ? " " : "") << k(i, j);
      out << "\n";
    }
  }
  for (const auto& [name, f] : model.fields) {
    out << "field " << name << "\n";
    for (std::size_t i = 0; i < f.size(); ++i) out << (i ? " " : "") << f[i];
    out << "\n";
  }
}

GridModelFile read_grid_model(std::istream& in) {
  std::string line;
  while (std::getline(in, line) && line.find_first_not_of(" \t\r") == std::string::npos) {
  }
  std::istringstream ls(line);
  std::string word;
  if (!(ls >> word) || word != "grid") throw FormatError("grid model must start with 'grid'");
  auto attrs = attributes(ls);
  GridModelFile g;
  g.dim = parse_int(require(attrs, "n"));
  g.points = parse_int(require(attrs, "N"));
  g.length = parse_double(require(attrs, "L"));
  return g;
}

GridFieldFile read_grid_field(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty field file");
  std::istringstream ls(line);
  std::string word;
  GridFieldFile f;
  if (!(ls >> word) || word != "field" || !(ls >> f.name)) throw FormatError("field file must start with 'field <name>'");
  auto attrs = attributes(ls);
  const std::string grid = require(attrs, "grid");
  auto x = grid.find('x');
  if (x == std::string::npos) {
    f.dim = 1;
    f.points = parse_int(grid);
  } else {
    f.dim = 2;
    f.points = parse_int(grid.substr(0, x));
    if (parse_int(grid.substr(x + 1)) != f.points) throw FormatError("only square grids are supported");
  }
  f.length = parse_double(require(attrs, "L"));
  if (auto it = attrs.find("layout"); it != attrs.end() && it->second != "row-major")
    throw FormatError("unsupported layout " + it->second);
  if (f.points <= 0) throw FormatError("grid size must be positive");
  const std::size_t count = f.dim == 1 ? f.points : static_cast<std::size_t>(f.points) * f.points;
  f.values = read_numbers(in, count, "grid field");
  return f;
}

void write_grid_field(std::ostream& out, const Grid& g, const Field& f, const std::string& name) {
  if (f.size() != g.cells()) throw InvalidArgument("field does not live on this grid");
  out << "field " << name << " grid=" << g.points();
  if (g.dim() == 2) out << "x" << g.points();
  out << " L=" << std::setprecision(17) << g.length() << " layout=row-major\n";
  const std::size_t row = static_cast<std::size_t>(g.points());
  for (std::size_t i = 0; i < f.size(); ++i) out << f[i] << ((i + 1) % row == 0 ? "\n" : " ");
}

LoadedModel load_model(const std::string& path) {
  auto in = open(path);
  std::string first;
  in >> first;
  in.clear();
  in.seekg(0);
  LoadedModel m;
  if (first == "atoms") {
    m.finite = std::make_unique<FiniteModelFile>(read_finite_model(in));
  } else if (first == "grid") {
    m.grid = std::make_unique<GridModelFile>(read_grid_model(in));
  } else {
    throw FormatError(path + ": unknown model kind '" + first + "'");
  }
  return m;
}

std::vector<double> load_values(const std::string& path, std::size_t expected) {
  auto in = open(path);
  std::string line;
  std::getline(in, line);
  if (line.find("grid=") != std::string::npos) {
    in.clear();
    in.seekg(0);
    auto f = read_grid_field(in);
    if (f.values.size() != expected) throw FormatError(path + ": field size does not match the model");
    return f.values;
  }
  std::istringstream ls(line);
  std::string word;
  ls >> word;
  if (word != "field") {
    in.clear();
    in.seekg(0);
  }
  return read_numbers(in, expected, "field");
}

}  // namespace capflow
