// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#include "fassim/txchain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "fassim/rng.hpp"

namespace fassim {

// ---- CRC ----

namespace {

struct CrcSpec {
  int length;
  std::uint32_t poly;  // without the leading x^L term
};

CrcSpec crc_spec(CrcKind kind) {
  switch (kind) {
    case CrcKind::Crc24A: return {24, 0x864CFB};
    case CrcKind::Crc24B: return {24, 0x800063};
    case CrcKind::Crc16: return {16, 0x1021};
  }
  raise(ErrorKind::Configuration, "unknown CRC");
}

}  // namespace

int crc_length(CrcKind kind) { return crc_spec(kind).length; }

Bits crc_compute(std::span<const std::uint8_t> bits, CrcKind kind) {
  const CrcSpec spec = crc_spec(kind);
  const std::uint32_t top = 1U << (spec.length - 1);
  const std::uint32_t mask = (spec.length == 32) ? 0xFFFFFFFFU : ((1U << spec.length) - 1U);
  std::uint32_t reg = 0;
  for (std::uint8_t b : bits) {
    const bool fb = ((reg & top) != 0) != (b != 0);
    reg = (reg << 1) & mask;
    if (fb) reg ^= spec.poly;
  }
  Bits out(spec.length);
  for (int i = 0; i < spec.length; ++i) out[i] = static_cast<std::uint8_t>((reg >> (spec.length - 1 - i)) & 1U);
  return out;
}

Bits crc_attach(std::span<const std::uint8_t> bits, CrcKind kind) {
  Bits out(bits.begin(), bits.end());
  const Bits crc = crc_compute(bits, kind);
  out.insert(out.end(), crc.begin(), crc.end());
  return out;
}

bool crc_check(std::span<const std::uint8_t> bits_with_crc, CrcKind kind) {
  const int l = crc_length(kind);
  if (static_cast<int>(bits_with_crc.size()) < l) return false;
  const auto body = bits_with_crc.first(bits_with_crc.size() - l);
  const Bits crc = crc_compute(body, kind);
  return std::equal(crc.begin(), crc.end(), bits_with_crc.end() - l);
}

// ---- constellations ----

Modulation modulation_from_string(const std::string& name) {
  if (name == "QPSK" || name == "qpsk") return Modulation::Qpsk;
  if (name == "16QAM" || name == "16qam") return Modulation::Qam16;
  if (name == "64QAM" || name == "64qam") return Modulation::Qam64;
  raise(ErrorKind::Configuration, "unknown modulation '" + name + "'");
}

Modulation modulation_from_order(int qm) {
  switch (qm) {
    case 2: return Modulation::Qpsk;
    case 4: return Modulation::Qam16;
    case 6: return Modulation::Qam64;
    default: raise(ErrorKind::Configuration, "unsupported modulation order " + std::to_string(qm));
  }
}

std::string to_string(Modulation m) {
  switch (m) {
    case Modulation::Qpsk: return "QPSK";
    case Modulation::Qam16: return "16QAM";
    case Modulation::Qam64: return "64QAM";
  }
  return "?";
}

namespace {

// One real axis of the NR Gray mapping. Bits (a0, a1, a2) of the axis label:
// a0 sign, a1 picks inner/outer, a2 refines within a pair.
double axis_level(int label, int bits) {
  auto bit = [&](int i) { return (label >> (bits - 1 - i)) & 1; };
  auto pm = [](int b) { return 1.0 - 2.0 * b; };
  switch (bits) {
    case 1: return pm(bit(0)) / std::sqrt(2.0);
    case 2: return pm(bit(0)) * (2.0 - pm(bit(1))) / std::sqrt(10.0);
    case 3: return pm(bit(0)) * (4.0 - pm(bit(1)) * (2.0 - pm(bit(2)))) / std::sqrt(42.0);
    default: raise(ErrorKind::Configuration, "unsupported axis width");
  }
}

Constellation build_constellation(Modulation m) {
  Constellation c;
  c.modulation = m;
  c.qm = bits_per_symbol(m);
  const int half = c.qm / 2;
  c.levels.resize(1U << half);
  for (int a = 0; a < (1 << half); ++a) c.levels[a] = axis_level(a, half);
  c.points.resize(1U << c.qm);
  for (int label = 0; label < (1 << c.qm); ++label) {
    int i_label = 0;
    int q_label = 0;
    for (int b = 0; b < c.qm; ++b) {
      const int v = (label >> (c.qm - 1 - b)) & 1;
      if (b % 2 == 0) i_label = (i_label << 1) | v;
      else q_label = (q_label << 1) | v;
    }
    c.points[label] = {c.levels[i_label], c.levels[q_label]};
  }
  return c;
}

}  // namespace

const Constellation& constellation(Modulation m) {
  static const Constellation qpsk = build_constellation(Modulation::Qpsk);
  static const Constellation qam16 = build_constellation(Modulation::Qam16);
  static const Constellation qam64 = build_constellation(Modulation::Qam64);
  switch (m) {
    case Modulation::Qpsk: return qpsk;
    case Modulation::Qam16: return qam16;
    case Modulation::Qam64: return qam64;
  }
  raise(ErrorKind::Configuration, "unknown modulation");
}

std::vector<cdouble> map_symbols(std::span<const std::uint8_t> bits, const Constellation& c) {
  if (bits.size() % c.qm != 0) raise(ErrorKind::Framing, "bit count not divisible by Qm");
  std::vector<cdouble> out(bits.size() / c.qm);
  for (std::size_t s = 0; s < out.size(); ++s) {
    int label = 0;
    for (int b = 0; b < c.qm; ++b) label = (label << 1) | (bits[s * c.qm + b] & 1);
    out[s] = c.points[label];
  }
  return out;
}

// ---- scrambling ----

Bits gold_sequence(std::uint32_t c_init, std::size_t n) {
  constexpr std::size_t kNc = 1600;
  const std::size_t total = n + kNc + 31;
  std::vector<std::uint8_t> x1(total, 0);
  std::vector<std::uint8_t> x2(total, 0);
  x1[0] = 1;
  for (int i = 0; i < 31; ++i) x2[i] = static_cast<std::uint8_t>((c_init >> i) & 1U);
  for (std::size_t i = 0; i + 31 < total; ++i) {
    x1[i + 31] = x1[i + 3] ^ x1[i];
    x2[i + 31] = x2[i + 3] ^ x2[i + 2] ^ x2[i + 1] ^ x2[i];
  }
  Bits c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = x1[i + kNc] ^ x2[i + kNc];
  return c;
}

Bits scramble(std::span<const std::uint8_t> bits, std::uint32_t c_init) {
  const Bits c = gold_sequence(c_init, bits.size());
  Bits out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) out[i] = (bits[i] ^ c[i]) & 1;
  return out;
}

std::uint32_t default_c_init(std::uint64_t seed, std::uint64_t subframe) {
  return static_cast<std::uint32_t>(substream_key(seed, {static_cast<std::uint64_t>(Stream::Scrambler), subframe}) &
                                    0x7FFFFFFFULL);
}

// ---- LDPC base graphs ----

namespace {

constexpr std::array<int, 8> kSetBases = {2, 3, 5, 7, 9, 11, 13, 15};
constexpr int kMaxLifting = 384;

}  // namespace

const std::vector<int>& lifting_sizes() {
  static const std::vector<int> sizes = [] {
    std::vector<int> v;
    for (int a : kSetBases)
      for (int z = a; z <= kMaxLifting; z *= 2) v.push_back(z);
    std::sort(v.begin(), v.end());
    return v;
  }();
  return sizes;
}

int lifting_set(int z) {
  for (std::size_t i = 0; i < kSetBases.size(); ++i)
    for (int v = kSetBases[i]; v <= kMaxLifting; v *= 2)
      if (v == z) return static_cast<int>(i);
  return -1;
}

BaseGraph parse_base_graph(const std::string& text) {
  BaseGraph bg;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  std::string expected;
  std::size_t body_start = std::string::npos;
  int current = -1;
  std::size_t pos = 0;
  while (std::getline(in, line)) {
    pos += line.size() + 1;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "bg") {
      std::string r;
      std::string c;
      std::string s;
      int sets = 0;
      ls >> bg.id >> r >> bg.rows >> c >> bg.cols >> s >> sets;
      if (!ls || r != "rows" || c != "cols" || sets != 8) raise(ErrorKind::Asset, "bad base graph header");
      have_header = true;
    } else if (tag == "checksum") {
      std::string algo;
      ls >> algo >> expected;
      if (algo != "fnv1a64") raise(ErrorKind::Asset, "unknown checksum algorithm " + algo);
      body_start = pos;
    } else if (tag == "set") {
      ls >> current;
      if (current < 0 || current >= 8) raise(ErrorKind::Asset, "bad lifting set index");
    } else {
      if (current < 0) raise(ErrorKind::Asset, "edge before any set header");
      BaseGraphEdge e{};
      std::istringstream es(line);
      es >> e.row >> e.col >> e.shift;
      if (!es || e.row < 0 || e.row >= bg.rows || e.col < 0 || e.col >= bg.cols || e.shift < 0)
        raise(ErrorKind::Asset, "bad base graph edge: " + line);
      bg.sets[current].push_back(e);
    }
  }
  if (!have_header || body_start == std::string::npos) raise(ErrorKind::Asset, "base graph header missing");
  if (hex64(fnv1a64(std::string_view(text).substr(body_start))) != expected)
    raise(ErrorKind::Asset, "base graph checksum mismatch");
  bg.checksum = expected;
  bg.info_cols = bg.cols - bg.rows;
  if (bg.info_cols <= 0) raise(ErrorKind::Asset, "base graph has no information columns");
  for (const auto& set : bg.sets)
    if (set.size() != bg.sets[0].size()) raise(ErrorKind::Asset, "lifting sets differ in edge count");
  return bg;
}

const BaseGraph& base_graph(int id) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<BaseGraph>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(id);
  if (it != cache.end()) return *it->second;
  if (id != 1 && id != 2) raise(ErrorKind::Configuration, "base graph must be 1 or 2");
  auto bg = std::make_unique<BaseGraph>(
      parse_base_graph(read_text_file(data_dir() + "/ldpc/bg" + std::to_string(id) + ".txt")));
  if (bg->id != id) raise(ErrorKind::Asset, "base graph file id mismatch");
  return *cache.emplace(id, std::move(bg)).first->second;
}

// ---- LDPC code ----

namespace {

// out ^= P^s v, where (P^s v)[i] = v[(i + s) mod z].
void xor_shifted(std::uint8_t* out, const std::uint8_t* v, int s, int z) {
  for (int i = 0; i < z - s; ++i) out[i] ^= v[i + s];
  for (int i = z - s; i < z; ++i) out[i] ^= v[i + s - z];
}

// x such that P^s x = y.
void unshift(std::uint8_t* x, const std::uint8_t* y, int s, int z) {
  for (int i = 0; i < z; ++i) x[(i + s) % z] = y[i];
}

}  // namespace

LdpcCode::LdpcCode(int bg_id, int z) : bg_(&base_graph(bg_id)), z_(z) {
  const int set = lifting_set(z);
  if (set < 0) raise(ErrorKind::Configuration, "lifting size " + std::to_string(z) + " is not in the standard set");
  edges_ = bg_->sets[set];
  for (auto& e : edges_) e.shift %= z;
  std::stable_sort(edges_.begin(), edges_.end(), [](const auto& a, const auto& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  row_start_.assign(bg_->rows + 1, 0);
  for (const auto& e : edges_) ++row_start_[e.row + 1];
  for (int r = 0; r < bg_->rows; ++r) row_start_[r + 1] += row_start_[r];
}

Bits LdpcCode::encode(std::span<const std::uint8_t> info) const {
  const int kb = bg_->info_cols;
  const int z = z_;
  if (static_cast<int>(info.size()) != kb * z) raise(ErrorKind::Configuration, "LDPC info length mismatch");
  Bits cw(static_cast<std::size_t>(length()), 0);
  std::copy(info.begin(), info.end(), cw.begin());

  // lambda_r: contribution of the information columns to core row r.
  std::vector<std::uint8_t> lambda(4 * static_cast<std::size_t>(z), 0);
  for (int r = 0; r < 4; ++r)
    for (int e = row_start_[r]; e < row_start_[r + 1]; ++e)
      if (edges_[e].col < kb) xor_shifted(&lambda[r * z], &cw[edges_[e].col * z], edges_[e].shift, z);

  // Core parity block: summing the four rows cancels every parity column
  // but the first, which appears with an odd shift.
  auto core_shift = [&](int r, int col) {
    for (int e = row_start_[r]; e < row_start_[r + 1]; ++e)
      if (edges_[e].col == col) return edges_[e].shift;
    return -1;
  };
  std::map<int, int> shift_count;
  for (int r = 0; r < 4; ++r)
    if (int s = core_shift(r, kb); s >= 0) shift_count[s] ^= 1;
  int odd_shift = -1;
  for (auto [s, odd] : shift_count)
    if (odd != 0) {
      if (odd_shift >= 0) raise(ErrorKind::Asset, "core parity block is not dual-diagonal");
      odd_shift = s;
    }
  if (odd_shift < 0) raise(ErrorKind::Asset, "core parity block is singular");

  std::vector<std::uint8_t> acc(z);
  for (int i = 0; i < z; ++i) acc[i] = lambda[i] ^ lambda[z + i] ^ lambda[2 * z + i] ^ lambda[3 * z + i];
  unshift(&cw[kb * z], acc.data(), odd_shift, z);

  // Rows 0..2 each introduce the next core parity column.
  for (int r = 0; r < 3; ++r) {
    std::copy_n(&lambda[r * z], z, acc.begin());
    int new_shift = -1;
    for (int e = row_start_[r]; e < row_start_[r + 1]; ++e) {
      const auto& ed = edges_[e];
      if (ed.col < kb) continue;
      if (ed.col == kb + r + 1) {
        new_shift = ed.shift;
      } else if (ed.col <= kb + r) {
        xor_shifted(acc.data(), &cw[ed.col * z], ed.shift, z);
      } else {
        raise(ErrorKind::Asset, "core parity block is not lower-triangular");
      }
    }
    if (new_shift < 0) raise(ErrorKind::Asset, "core parity row misses its diagonal");
    unshift(&cw[(kb + r + 1) * z], acc.data(), new_shift, z);
  }

  // Extension rows: one degree-1 parity column each.
  for (int r = 4; r < bg_->rows; ++r) {
    std::fill(acc.begin(), acc.end(), 0);
    int own_shift = -1;
    for (int e = row_start_[r]; e < row_start_[r + 1]; ++e) {
      const auto& ed = edges_[e];
      if (ed.col == kb + r) {
        own_shift = ed.shift;
      } else {
        xor_shifted(acc.data(), &cw[ed.col * z], ed.shift, z);
      }
    }
    if (own_shift < 0) raise(ErrorKind::Asset, "extension row misses its parity column");
    unshift(&cw[(kb + r) * z], acc.data(), own_shift, z);
  }
  return cw;
}

bool LdpcCode::check(std::span<const std::uint8_t> codeword, int active_rows) const {
  if (static_cast<int>(codeword.size()) != length()) raise(ErrorKind::Framing, "codeword length mismatch");
  const int rows = active_rows < 0 ? bg_->rows : std::min(active_rows, bg_->rows);
  std::vector<std::uint8_t> syn(z_);
  for (int r = 0; r < rows; ++r) {
    std::fill(syn.begin(), syn.end(), 0);
    for (int e = row_start_[r]; e < row_start_[r + 1]; ++e)
      xor_shifted(syn.data(), &codeword[edges_[e].col * z_], edges_[e].shift, z_);
    if (std::any_of(syn.begin(), syn.end(), [](std::uint8_t v) { return (v & 1) != 0; })) return false;
  }
  return true;
}

int LdpcCode::decode(std::span<const float> llr, Bits& hard, int max_iters, int active_rows, float scale) const {
  const int z = z_;
  const int n = length();
  if (static_cast<int>(llr.size()) != n) raise(ErrorKind::Framing, "LLR length mismatch");
  const int rows = active_rows < 0 ? bg_->rows : std::clamp(active_rows, 4, bg_->rows);
  const int used_edges = row_start_[rows];
  // Columns beyond info + core + active extension rows take no part.
  const int used = std::min(n, (bg_->info_cols + rows) * z);

  std::vector<float> post(llr.begin(), llr.end());
  std::vector<float> msg(static_cast<std::size_t>(used_edges) * z, 0.0F);
  int max_deg = 0;
  for (int r = 0; r < rows; ++r) max_deg = std::max(max_deg, row_start_[r + 1] - row_start_[r]);
  std::vector<float> q(static_cast<std::size_t>(max_deg) * z);
  // Magnitudes are non-negative, so their bit patterns order like the
  // floats and the two-minimum search runs on integers.
  std::vector<std::int32_t> min1(z);
  std::vector<std::int32_t> min2(z);
  std::vector<std::int32_t> arg(z);
  std::vector<std::uint32_t> sgn(z);

  hard.assign(n, 0);
  auto harden = [&] {
    for (int i = 0; i < used; ++i) hard[i] = post[i] < 0.0F ? 1 : 0;
  };
  harden();
  if (check(hard, rows)) return 0;

  constexpr std::int32_t kInf = std::numeric_limits<std::int32_t>::max();
  constexpr std::uint32_t kSign = 0x80000000U;
  for (int it = 1; it <= max_iters; ++it) {
    for (int r = 0; r < rows; ++r) {
      const int e0 = row_start_[r];
      const int deg = row_start_[r + 1] - e0;
      std::fill(min1.begin(), min1.end(), kInf);
      std::fill(min2.begin(), min2.end(), kInf);
      std::fill(sgn.begin(), sgn.end(), 0U);
      std::fill(arg.begin(), arg.end(), 0);
      for (int j = 0; j < deg; ++j) {
        const auto& ed = edges_[e0 + j];
        const float* l = &post[static_cast<std::size_t>(ed.col) * z];
        const float* m = &msg[static_cast<std::size_t>(e0 + j) * z];
        float* qj = &q[static_cast<std::size_t>(j) * z];
        const int s = ed.shift;
        for (int i = 0; i < z - s; ++i) qj[i] = l[i + s] - m[i];
        for (int i = z - s; i < z; ++i) qj[i] = l[i + s - z] - m[i];
        std::int32_t* m1 = min1.data();
        std::int32_t* m2 = min2.data();
        std::int32_t* ag = arg.data();
        std::uint32_t* sg = sgn.data();
        for (int i = 0; i < z; ++i) {
          const std::uint32_t bits = std::bit_cast<std::uint32_t>(qj[i]);
          const std::int32_t a = static_cast<std::int32_t>(bits & ~kSign);
          sg[i] ^= bits & kSign;
          const std::int32_t hi = a > m1[i] ? a : m1[i];
          m2[i] = hi < m2[i] ? hi : m2[i];
          ag[i] = a < m1[i] ? j : ag[i];
          m1[i] = a < m1[i] ? a : m1[i];
        }
      }
      for (int j = 0; j < deg; ++j) {
        const auto& ed = edges_[e0 + j];
        float* l = &post[static_cast<std::size_t>(ed.col) * z];
        float* m = &msg[static_cast<std::size_t>(e0 + j) * z];
        const float* qj = &q[static_cast<std::size_t>(j) * z];
        const int s = ed.shift;
        for (int i = 0; i < z; ++i) {
          const std::int32_t lo = min1[i];
          const std::int32_t next = min2[i];
          const std::int32_t mag = arg[i] == j ? next : lo;
          const std::uint32_t sign = (sgn[i] ^ std::bit_cast<std::uint32_t>(qj[i])) & kSign;
          m[i] = scale * std::bit_cast<float>(static_cast<std::uint32_t>(mag) | sign);
        }
        for (int i = 0; i < z - s; ++i) l[i + s] = qj[i] + m[i];
        for (int i = z - s; i < z; ++i) l[i + s - z] = qj[i] + m[i];
      }
    }
    harden();
    if (check(hard, rows)) return it;
  }
  return max_iters;
}

// ---- transport block ----

SegmentPlan plan_transport(int tbs, double rate, int n_re, int qm) {
  if (tbs <= 0) raise(ErrorKind::Configuration, "TBS must be positive");
  if (n_re <= 0) raise(ErrorKind::Configuration, "no data resource elements");
  if (!(rate > 0.0 && rate < 1.0)) raise(ErrorKind::Configuration, "code rate must lie in (0, 1)");
  modulation_from_order(qm);

  SegmentPlan p;
  p.tbs = tbs;
  p.qm = qm;
  p.rate = rate;
  p.g = n_re * qm;
  p.tb_crc = tbs > 3824 ? 24 : 16;
  p.bg = (tbs <= 292 || (tbs <= 3824 && rate <= 0.67) || rate <= 0.25) ? 2 : 1;

  const int b = tbs + p.tb_crc;
  const int kcb = p.bg == 1 ? 8448 : 3840;
  int b_prime = b;
  if (b <= kcb) {
    p.c = 1;
    p.cb_crc = 0;
  } else {
    p.cb_crc = 24;
    p.c = (b + (kcb - 24) - 1) / (kcb - 24);
    b_prime = b + p.c * p.cb_crc;
  }
  if (p.c > 128) raise(ErrorKind::Configuration, "transport block needs more code blocks than supported");
  if (b_prime % p.c != 0) raise(ErrorKind::Configuration, "TBS does not split evenly into code blocks");
  p.k_prime = b_prime / p.c;

  int kb = 22;
  if (p.bg == 2) {
    if (b > 640) kb = 10;
    else if (b > 560) kb = 9;
    else if (b > 192) kb = 8;
    else kb = 6;
  }
  p.z = 0;
  for (int z : lifting_sizes())
    if (kb * z >= p.k_prime) {
      p.z = z;
      break;
    }
  if (p.z == 0) raise(ErrorKind::Configuration, "code block too long for any lifting size");
  p.k = (p.bg == 1 ? 22 : 10) * p.z;
  p.fillers = p.k - p.k_prime;
  p.n = (p.bg == 1 ? 66 : 50) * p.z;

  const int per = p.g / qm;  // symbols
  p.e.resize(p.c);
  for (int r = 0; r < p.c; ++r) {
    const int lo = qm * (per / p.c);
    const int hi = qm * ((per + p.c - 1) / p.c);
    p.e[r] = (r <= p.c - (per % p.c) - 1) ? lo : hi;
  }
  return p;
}

std::vector<Bits> segment(std::span<const std::uint8_t> tb_with_crc, const SegmentPlan& plan) {
  if (static_cast<int>(tb_with_crc.size()) != plan.tbs + plan.tb_crc)
    raise(ErrorKind::Framing, "transport block length does not match plan");
  const int payload_per_block = plan.k_prime - plan.cb_crc;
  std::vector<Bits> blocks;
  blocks.reserve(plan.c);
  for (int r = 0; r < plan.c; ++r) {
    auto part = tb_with_crc.subspan(static_cast<std::size_t>(r) * payload_per_block, payload_per_block);
    Bits blk = plan.cb_crc > 0 ? crc_attach(part, CrcKind::Crc24B) : Bits(part.begin(), part.end());
    blk.resize(plan.k, 0);
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

int active_check_rows(const SegmentPlan& plan, int e) {
  const int kb = plan.bg == 1 ? 22 : 10;
  const int rows = plan.bg == 1 ? 46 : 42;
  if (e + plan.fillers >= plan.n) return rows;
  const int last = e + plan.fillers - 1 + 2 * plan.z;  // codeword index
  const int last_col = last / plan.z;
  return std::clamp(last_col - kb + 1, 4, rows);
}

namespace {

// Buffer positions (codeword indices) read by rv-0 bit selection, before
// interleaving.
std::vector<int> selection(const SegmentPlan& plan, int e) {
  const int filler_lo = plan.k_prime - 2 * plan.z;
  const int filler_hi = plan.k - 2 * plan.z;
  if (plan.n - plan.fillers <= 0) raise(ErrorKind::Configuration, "empty circular buffer");
  std::vector<int> idx(e);
  int k = 0;
  for (long j = 0; k < e; ++j) {
    const int pos = static_cast<int>(j % plan.n);
    if (pos >= filler_lo && pos < filler_hi) continue;
    idx[k++] = pos + 2 * plan.z;
  }
  return idx;
}

}  // namespace

Bits rate_match(std::span<const std::uint8_t> codeword, const SegmentPlan& plan, int e) {
  const int full = plan.n + 2 * plan.z;
  if (static_cast<int>(codeword.size()) != full) raise(ErrorKind::Framing, "codeword length does not match plan");
  if (e <= 0 || e % plan.qm != 0) raise(ErrorKind::Configuration, "rate-matched length must be a positive multiple of Qm");
  const std::vector<int> idx = selection(plan, e);
  const int cols = e / plan.qm;
  Bits out(e);
  for (int i = 0; i < plan.qm; ++i)
    for (int j = 0; j < cols; ++j) out[i + j * plan.qm] = codeword[idx[i * cols + j]];
  return out;
}

std::vector<float> rate_recover(std::span<const float> llr, const SegmentPlan& plan, int e, float clip) {
  if (static_cast<int>(llr.size()) != e) raise(ErrorKind::Framing, "LLR count does not match block length");
  const std::vector<int> idx = selection(plan, e);
  const int cols = e / plan.qm;
  std::vector<float> buf(static_cast<std::size_t>(plan.n + 2 * plan.z), 0.0F);
  for (int i = 0; i < plan.qm; ++i)
    for (int j = 0; j < cols; ++j) buf[idx[i * cols + j]] += llr[i + j * plan.qm];
  for (int pos = plan.k_prime; pos < plan.k; ++pos) buf[pos] = clip;
  return buf;
}

CodedTransportBlock encode_transport(std::span<const std::uint8_t> payload, const SegmentPlan& plan,
                                     std::uint32_t c_init, const Constellation& c) {
  if (static_cast<int>(payload.size()) != plan.tbs) raise(ErrorKind::Framing, "payload length does not match TBS");
  if (c.qm != plan.qm) raise(ErrorKind::Configuration, "constellation does not match plan");
  CodedTransportBlock tb;
  tb.plan = plan;
  tb.payload.assign(payload.begin(), payload.end());
  const Bits with_crc = crc_attach(payload, plan.tb_crc == 24 ? CrcKind::Crc24A : CrcKind::Crc16);
  const LdpcCode code(plan.bg, plan.z);
  tb.coded.reserve(plan.g);
  const std::vector<Bits> blocks = segment(with_crc, plan);
  for (int r = 0; r < plan.c; ++r) {
    tb.codewords.push_back(code.encode(blocks[r]));
    const Bits rm = rate_match(tb.codewords.back(), plan, plan.e[r]);
    tb.coded.insert(tb.coded.end(), rm.begin(), rm.end());
  }
  tb.scrambled = scramble(tb.coded, c_init);
  tb.symbols = map_symbols(tb.scrambled, c);
  return tb;
}

}  // namespace fassim
