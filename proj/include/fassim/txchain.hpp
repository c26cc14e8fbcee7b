// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fassim/common.hpp"

namespace fassim {

// ---- CRC ----

enum class CrcKind { Crc24A, Crc24B, Crc16 };

int crc_length(CrcKind kind);
/// Remainder of bits * x^L divided by the generator, MSB first.
Bits crc_compute(std::span<const std::uint8_t> bits, CrcKind kind);
Bits crc_attach(std::span<const std::uint8_t> bits, CrcKind kind);
bool crc_check(std::span<const std::uint8_t> bits_with_crc, CrcKind kind);

// ---- constellations ----

enum class Modulation { Qpsk = 2, Qam16 = 4, Qam64 = 6 };

inline int bits_per_symbol(Modulation m) { return static_cast<int>(m); }
Modulation modulation_from_string(const std::string& name);
Modulation modulation_from_order(int qm);
std::string to_string(Modulation m);

/// Gray-labelled square QAM with unit mean energy. Label bits are read
/// b0 b1 ... with even bits on the in-phase axis; points[label] where label
/// packs b0 as the most significant bit.
struct Constellation {
  Modulation modulation = Modulation::Qpsk;
  int qm = 2;
  std::vector<cdouble> points;
  /// Amplitude levels of one real axis, indexed by the axis label
  /// (qm/2 bits, first bit most significant).
  std::vector<double> levels;
};

const Constellation& constellation(Modulation m);

std::vector<cdouble> map_symbols(std::span<const std::uint8_t> bits, const Constellation& c);

// ---- scrambling ----

/// Length-n Gold sequence with the 1600-chip offset.
Bits gold_sequence(std::uint32_t c_init, std::size_t n);
Bits scramble(std::span<const std::uint8_t> bits, std::uint32_t c_init);
/// Default scrambler seed for a subframe when the config does not pin one.
std::uint32_t default_c_init(std::uint64_t seed, std::uint64_t subframe);

// ---- LDPC ----

struct BaseGraphEdge {
  int row;
  int col;
  int shift;  // stored for the largest lifting size of the set
};

struct BaseGraph {
  int id = 0;
  int rows = 0;
  int cols = 0;
  int info_cols = 0;  // 22 or 10
  std::string checksum;
  std::array<std::vector<BaseGraphEdge>, 8> sets;
};

/// Parses a base-graph file and verifies its checksum.
BaseGraph parse_base_graph(const std::string& text);
/// Loads data/ldpc/bg<id>.txt once per process.
const BaseGraph& base_graph(int id);

/// Index of the lifting set containing z, or -1.
int lifting_set(int z);
/// All lifting sizes in increasing order.
const std::vector<int>& lifting_sizes();

/// A lifted code: parity-check matrix H of (rows*Z) x (cols*Z).
class LdpcCode {
 public:
  LdpcCode(int bg_id, int z);

  int bg_id() const { return bg_->id; }
  int z() const { return z_; }
  int rows() const { return bg_->rows; }
  int info_length() const { return bg_->info_cols * z_; }
  int length() const { return bg_->cols * z_; }
  const std::vector<BaseGraphEdge>& edges() const { return edges_; }

  /// Systematic encoding of info_length() bits into length() bits.
  Bits encode(std::span<const std::uint8_t> info) const;
  /// True when every check of the first active_rows base rows holds.
  bool check(std::span<const std::uint8_t> codeword, int active_rows = -1) const;
  /// Layered normalised min-sum. llr has length() entries (positive means 0).
  /// Writes hard decisions and returns the iterations used; stops once all
  /// active checks are satisfied.
  int decode(std::span<const float> llr, Bits& hard, int max_iters, int active_rows = -1,
             float scale = 0.75F) const;

 private:
  const BaseGraph* bg_;
  int z_;
  std::vector<BaseGraphEdge> edges_;  // shifts reduced mod z, row-major
  std::vector<int> row_start_;        // rows + 1 offsets into edges_
};

// ---- transport block ----

struct SegmentPlan {
  int tbs = 0;
  int qm = 2;
  double rate = 0.0;   // target code rate used for graph selection
  int g = 0;           // total coded bits, N_RE * Qm
  int tb_crc = 16;     // 16 or 24
  int bg = 2;
  int c = 1;           // code blocks
  int cb_crc = 0;      // 0 or 24
  int k_prime = 0;     // payload + CRC bits per block
  int z = 0;
  int k = 0;           // info bits per block incl. fillers
  int fillers = 0;
  int n = 0;           // circular buffer size after puncturing 2Z
  std::vector<int> e;  // rate-matched length per block
};

/// Graph choice, segmentation and rate-matching lengths for one transport
/// block.
SegmentPlan plan_transport(int tbs, double rate, int n_re, int qm);

/// Splits a CRC-attached transport block into plan.c blocks of plan.k bits:
/// payload, CRC24B when c > 1, then plan.fillers zero fillers.
std::vector<Bits> segment(std::span<const std::uint8_t> tb_with_crc, const SegmentPlan& plan);

/// Base rows the decoder needs when only e bits of a block are sent: the
/// extension rows whose parity columns are never transmitted are dropped.
int active_check_rows(const SegmentPlan& plan, int e);

/// Circular-buffer selection (rv 0) and row-column bit interleaving of one
/// encoded block into e bits.
Bits rate_match(std::span<const std::uint8_t> codeword, const SegmentPlan& plan, int e);

/// Inverse of rate_match on LLRs: returns length() decoder LLRs with
/// punctured bits at 0, fillers at +clip and repeated bits accumulated.
std::vector<float> rate_recover(std::span<const float> llr, const SegmentPlan& plan, int e, float clip = 64.0F);

struct CodedTransportBlock {
  SegmentPlan plan;
  Bits payload;
  std::vector<Bits> codewords;
  Bits coded;      // concatenated rate-matched bits, length G
  Bits scrambled;
  std::vector<cdouble> symbols;
};

CodedTransportBlock encode_transport(std::span<const std::uint8_t> payload, const SegmentPlan& plan,
                                     std::uint32_t c_init, const Constellation& c);

}  // namespace fassim
