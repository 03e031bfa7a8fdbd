#include <fstream>
#include <sstream>

#include "mfpod/binary_io.hpp"
#include "mfpod/pipeline.hpp"

namespace mfpod {

namespace {

constexpr std::string_view kSurrogateMagic = "MFSURR01";
constexpr std::string_view kLstmMagic = "MFLSTM01";
constexpr std::string_view kStaticMagic = "MFSTAT01";

void write_vector(std::ostream& out, const Vector& v) {
  io::write_u32(out, std::uint32_t(v.size()));
  io::write_f64s(out, std::span<const double>(v.data(), std::size_t(v.size())));
}

Vector read_vector(io::Reader& r, std::uint32_t max = 1u << 28) {
  const std::uint32_t n = r.u32();
  if (n > max) r.fail("vector length out of range");
  Vector v(n);
  r.f64s(std::span<double>(v.data(), n));
  return v;
}

void write_times(std::ostream& out, const std::vector<double>& t) {
  io::write_u32(out, std::uint32_t(t.size()));
  io::write_f64s(out, t);
}

std::vector<double> read_times(io::Reader& r) {
  const std::uint32_t n = r.u32();
  if (n > (1u << 28)) r.fail("time count out of range");
  std::vector<double> t(n);
  r.f64s(t);
  return t;
}

void write_grid(std::ostream& out, const std::optional<Grid2D>& g) {
  io::write_u32(out, g ? 1 : 0);
  if (g) {
    io::write_u32(out, std::uint32_t(g->n()));
    io::write_f64(out, g->half_length());
  }
}

std::optional<Grid2D> read_grid(io::Reader& r) {
  const std::uint32_t has = r.u32();
  if (has > 1) r.fail("bad grid flag");
  if (!has) return std::nullopt;
  const std::uint32_t n = r.u32();
  const double L = r.f64();
  try {
    return Grid2D(int(n), L);
  } catch (const Error& e) {
    r.fail(std::string("bad grid: ") + e.what());
  }
}

void write_normalizer(std::ostream& out, const Normalizer& n) {
  write_vector(out, n.mean);
  write_vector(out, n.stddev);
}

Normalizer read_normalizer(io::Reader& r) {
  Normalizer n;
  n.mean = read_vector(r);
  n.stddev = read_vector(r);
  return n;
}

void write_layout(std::ostream& out, const InputLayout& l) {
  io::write_u32(out, l.has_time ? 1 : 0);
  io::write_u32(out, std::uint32_t(l.n_params));
  io::write_u32(out, std::uint32_t(l.n_coeffs));
}

InputLayout read_layout(io::Reader& r) {
  InputLayout l;
  const std::uint32_t t = r.u32();
  if (t > 1) r.fail("bad time flag");
  l.has_time = t == 1;
  l.n_params = int(r.u32());
  l.n_coeffs = int(r.u32());
  if (l.n_params > 4096 || l.n_coeffs > (1 << 20)) r.fail("input layout out of range");
  return l;
}

void write_affine(std::ostream& out, const Affine& a) {
  io::write_u32(out, std::uint32_t(a.W.rows()));
  io::write_u32(out, std::uint32_t(a.W.cols()));
  io::write_matrix_row_major(out, a.W);
  write_vector(out, a.b);
}

Affine read_affine(io::Reader& r) {
  const std::uint32_t rows = r.u32(), cols = r.u32();
  if (rows > (1u << 16) || cols > (1u << 20)) r.fail("affine shape out of range");
  Affine a;
  a.W.resize(rows, cols);
  r.matrix_row_major(a.W);
  a.b = read_vector(r);
  if (a.b.size() != a.W.rows()) r.fail("bias length mismatch");
  return a;
}

template <class Model, class Fn>
Model checked(const std::string& context, Fn&& fn) {
  try {
    Model m = fn();
    m.validate();
    return m;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Format) throw;
    throw Error(ErrorKind::Format, context + ": " + e.what());
  }
}

void write_lstm_block(std::ostream& out, const LstmModel& m) {
  io::write_magic(out, kLstmMagic);
  io::write_u32(out, std::uint32_t(m.params.layers.size()));
  write_layout(out, m.layout);
  for (const auto& l : m.params.layers) {
    const Eigen::Index H = l.hidden();
    io::write_u32(out, std::uint32_t(H));
    io::write_u32(out, std::uint32_t(l.input_size()));
    // Gate order f, u, o, c, each H x (H + D_in) row-major, then the biases.
    io::write_matrix_row_major(out, l.W_f());
    io::write_matrix_row_major(out, l.W_u());
    io::write_matrix_row_major(out, l.W_o());
    io::write_matrix_row_major(out, l.W_c());
    io::write_f64s(out, std::span<const double>(l.b.data(), std::size_t(l.b.size())));
  }
  write_affine(out, m.params.readout);
  write_normalizer(out, m.input_norm);
  write_normalizer(out, m.output_norm);
}

LstmModel read_lstm_block(io::Reader& r) {
  r.expect_magic(kLstmMagic);
  LstmModel m;
  const std::uint32_t n_layers = r.u32();
  if (n_layers == 0 || n_layers > 64) r.fail("layer count out of range");
  m.layout = read_layout(r);
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const std::uint32_t H = r.u32(), D = r.u32();
    if (H == 0 || H > 4096 || D > (1u << 20)) r.fail("layer shape out of range");
    LstmLayerWeights l;
    l.W.resize(4 * Eigen::Index(H), Eigen::Index(H) + D);
    for (int g = 0; g < 4; ++g) {
      Matrix block(H, Eigen::Index(H) + D);
      r.matrix_row_major(block);
      l.W.middleRows(g * Eigen::Index(H), H) = block;
    }
    l.b.resize(4 * Eigen::Index(H));
    r.f64s(std::span<double>(l.b.data(), std::size_t(l.b.size())));
    m.params.layers.push_back(std::move(l));
  }
  m.params.readout = read_affine(r);
  m.input_norm = read_normalizer(r);
  m.output_norm = read_normalizer(r);
  return m;
}

void write_static_block(std::ostream& out, const StaticModel& m) {
  io::write_magic(out, kStaticMagic);
  io::write_u32(out, std::uint32_t(m.hidden.size()));
  write_layout(out, m.layout);
  for (const auto& l : m.hidden) write_affine(out, l);
  write_affine(out, m.readout);
  write_normalizer(out, m.input_norm);
  write_normalizer(out, m.output_norm);
}

StaticModel read_static_block(io::Reader& r) {
  r.expect_magic(kStaticMagic);
  StaticModel m;
  const std::uint32_t n = r.u32();
  if (n > 64) r.fail("layer count out of range");
  m.layout = read_layout(r);
  for (std::uint32_t i = 0; i < n; ++i) m.hidden.push_back(read_affine(r));
  m.readout = read_affine(r);
  m.input_norm = read_normalizer(r);
  m.output_norm = read_normalizer(r);
  return m;
}

void write_profile(std::ostream& out, const FidelityProfile& p) {
  io::write_u32(out, std::uint32_t(p.n));
  io::write_f64(out, p.dt);
  io::write_f64(out, p.d);
  io::write_u32(out, std::uint32_t(p.save_every));
}

FidelityProfile read_profile(io::Reader& r) {
  FidelityProfile p;
  p.n = int(r.u32());
  p.dt = r.f64();
  p.d = r.f64();
  p.save_every = int(r.u32());
  return p;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Storage, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void write_lstm(std::ostream& out, const LstmModel& model) {
  model.validate();
  write_lstm_block(out, model);
}

LstmModel read_lstm(std::istream& in, const std::string& context) {
  io::Reader r(in, context);
  return checked<LstmModel>(context, [&] {
    LstmModel m = read_lstm_block(r);
    r.expect_end();
    return m;
  });
}

void write_static(std::ostream& out, const StaticModel& model) {
  model.validate();
  write_static_block(out, model);
}

StaticModel read_static(std::istream& in, const std::string& context) {
  io::Reader r(in, context);
  return checked<StaticModel>(context, [&] {
    StaticModel m = read_static_block(r);
    r.expect_end();
    return m;
  });
}

void write_model(std::ostream& out, const SurrogateModel& model) {
  model.validate();
  io::write_magic(out, kSurrogateMagic);

  const PodBasis& b = model.basis;
  io::write_u32(out, std::uint32_t(b.n_pod));
  io::write_matrix(out, b.modes);
  write_vector(out, b.sigma);
  io::write_u32(out, b.eps_pod ? 1 : 0);
  io::write_f64(out, b.eps_pod.value_or(0.0));
  io::write_u32(out, b.mean ? 1 : 0);
  if (b.mean) write_vector(out, *b.mean);
  write_grid(out, b.grid);
  io::write_u32(out, std::uint32_t(b.field_names.size()));
  for (const auto& f : b.field_names) io::write_string(out, f);

  io::write_u32(out, std::uint32_t(model.lift.spatial_mode));
  write_grid(out, model.lift.src_grid);
  write_grid(out, model.lift.dst_grid);
  write_times(out, model.lift.dst_times);

  const Provenance& p = model.provenance;
  io::write_u32(out, p.problem ? 1 : 0);
  if (p.problem) {
    io::write_u32(out, std::uint32_t(p.problem->problem));
    io::write_f64(out, p.problem->half_length);
    io::write_f64(out, p.problem->cfl);
    io::write_u32(out, p.problem->dealias ? 1 : 0);
    io::write_u32(out, std::uint32_t(p.problem->rd_initial));
  }
  write_profile(out, p.hf);
  write_profile(out, p.lf);
  io::write_f64(out, p.T_train);
  write_vector(out, p.param_lo);
  write_vector(out, p.param_hi);

  if (const auto* lstm = std::get_if<LstmModel>(&model.map)) {
    write_lstm_block(out, *lstm);
  } else {
    write_static_block(out, std::get<StaticModel>(model.map));
  }
}

SurrogateModel read_model(std::istream& in, const std::string& context) {
  io::Reader r(in, context);
  return checked<SurrogateModel>(context, [&] {
    r.expect_magic(kSurrogateMagic);
    SurrogateModel m;
    PodBasis& b = m.basis;
    b.n_pod = int(r.u32());
    b.modes = r.matrix();
    b.sigma = read_vector(r);
    const std::uint32_t has_eps = r.u32();
    const double eps = r.f64();
    if (has_eps > 1) r.fail("bad eps flag");
    if (has_eps) b.eps_pod = eps;
    const std::uint32_t has_mean = r.u32();
    if (has_mean > 1) r.fail("bad mean flag");
    if (has_mean) b.mean = read_vector(r);
    b.grid = read_grid(r);
    const std::uint32_t n_fields = r.u32();
    if (n_fields > 1024) r.fail("field count out of range");
    for (std::uint32_t i = 0; i < n_fields; ++i) b.field_names.push_back(r.string(4096));

    const std::uint32_t mode = r.u32();
    if (mode > std::uint32_t(InterpMode::Bilinear)) r.fail("bad interpolation mode");
    m.lift.spatial_mode = InterpMode(mode);
    m.lift.src_grid = read_grid(r);
    m.lift.dst_grid = read_grid(r);
    m.lift.dst_times = read_times(r);

    Provenance& p = m.provenance;
    const std::uint32_t has_problem = r.u32();
    if (has_problem > 1) r.fail("bad problem flag");
    if (has_problem) {
      ProblemSpec s;
      const std::uint32_t kind = r.u32();
      if (kind > std::uint32_t(Problem::ShallowWater)) r.fail("bad problem tag");
      s.problem = Problem(kind);
      s.half_length = r.f64();
      s.cfl = r.f64();
      const std::uint32_t dealias = r.u32();
      if (dealias > 1) r.fail("bad dealias flag");
      s.dealias = dealias == 1;
      const std::uint32_t initial = r.u32();
      if (initial > std::uint32_t(RdInitial::Spiral)) r.fail("bad initial-condition tag");
      s.rd_initial = RdInitial(initial);
      p.problem = s;
    }
    p.hf = read_profile(r);
    p.lf = read_profile(r);
    p.T_train = r.f64();
    p.param_lo = read_vector(r);
    p.param_hi = read_vector(r);

    std::string tag(8, '\0');
    r.bytes(tag.data(), tag.size());
    if (tag == kLstmMagic) {
      in.seekg(-8, std::ios::cur);
      m.map = read_lstm_block(r);
    } else if (tag == kStaticMagic) {
      in.seekg(-8, std::ios::cur);
      m.map = read_static_block(r);
    } else {
      r.fail("unknown coefficient map block");
    }
    r.expect_end();
    return m;
  });
}

void save_model(const SurrogateModel& model, const std::filesystem::path& path) {
  std::ostringstream buf(std::ios::binary);
  write_model(buf, model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Storage, "cannot write " + path.string());
  const std::string bytes = buf.str();
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw Error(ErrorKind::Storage, "failed writing " + path.string());
}

SurrogateModel load_model(const std::filesystem::path& path) {
  std::istringstream in(read_file(path), std::ios::binary);
  return read_model(in, path.string());
}

}  // namespace mfpod
