#include "segment_codec.h"

#include "lepton/error.h"

namespace lepton {
namespace {

// Two block rows of decoded context per channel; row y lives in slot y & 1.
struct Ring {
  int width = 0;
  std::array<std::vector<CodedBlock>, 2> rows;
};

std::vector<Ring> make_rings(const JpegHeader& h) {
  std::vector<Ring> rings(h.components.size());
  for (size_t c = 0; c < rings.size(); ++c) {
    rings[c].width = h.components[c].width_blocks;
    for (auto& r : rings[c].rows) r.resize(static_cast<size_t>(rings[c].width));
  }
  return rings;
}

// Visits the blocks of MCU rows [start, end) in coding order: per MCU row,
// channel by channel, block row by block row. after_row(m) runs once the
// MCU row is complete.
template <class BlockFn, class RowFn>
void walk(const JpegHeader& h, int start, int end, std::vector<Ring>& rings, BlockFn&& block_fn,
          RowFn&& after_row) {
  for (int m = start; m < end; ++m) {
    for (size_t c = 0; c < rings.size(); ++c) {
      const int v = h.components[c].mcu_v;
      Ring& ring = rings[c];
      for (int k = 0; k < v; ++k) {
        const int y = m * v + k;
        const bool has_above = y > start * v;
        std::vector<CodedBlock>& cur = ring.rows[y & 1];
        const std::vector<CodedBlock>& above = ring.rows[(y + 1) & 1];
        for (int bx = 0; bx < ring.width; ++bx) {
          BlockContext ctx;
          ctx.kind = channel_kind(h, c);
          if (has_above) ctx.above = &above[bx];
          if (bx > 0) ctx.left = &cur[bx - 1];
          if (has_above && bx > 0) ctx.above_left = &above[bx - 1];
          block_fn(c, bx, y, ctx, cur[bx]);
        }
      }
    }
    after_row(m);
  }
}

}  // namespace

Deadline::Deadline(double seconds) {
  if (seconds > 0) {
    at_ = std::chrono::steady_clock::now() +
          std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(seconds));
  }
}

void Deadline::check() const {
  if (at_ && std::chrono::steady_clock::now() > *at_) fail(ErrorCode::kTimeout, "time limit exceeded");
}

ChannelKind channel_kind(const JpegHeader& h, size_t channel) {
  return h.components[channel].frame_index == 0 ? ChannelKind::kLuma : ChannelKind::kChroma;
}

Bytes encode_segment(const JpegHeader& h, const std::vector<CoefficientPlane>& planes, int start, int end,
                     const ModelOptions& model, CostAccumulator* cost, const Deadline& deadline) {
  std::vector<BlockCoder> coders;
  for (size_t c = 0; c < planes.size(); ++c) coders.emplace_back(h.quant_for(static_cast<int>(c)), channel_kind(h, c), model);
  BinGrid grid(ModelLayout::instance().total_bins());
  RangeEncoder enc;
  std::vector<Ring> rings = make_rings(h);
  walk(
      h, start, end, rings,
      [&](size_t c, int bx, int y, const BlockContext& ctx, CodedBlock& out) {
        coders[c].encode(enc, grid, ctx, planes[c].block(bx, y), out, cost);
      },
      [&](int) { deadline.check(); });
  enc.flush();
  return std::move(enc.output());
}

size_t segment_decoder_bytes(const JpegHeader& h) {
  size_t total = ModelLayout::instance().total_bins() * sizeof(StatisticBin);
  for (const ScanComponent& sc : h.components) {
    total += 2 * static_cast<size_t>(sc.width_blocks) * (sizeof(CodedBlock) + sizeof(QuantizedBlock));
  }
  return total;
}

uint64_t decode_segment(const JpegHeader& h, const SegmentDecodeParams& params, ByteSource& src,
                        const std::function<void(ByteSpan)>& emit, const std::atomic<bool>& abort,
                        int* rows_high_water) {
  const size_t nch = h.components.size();
  std::vector<BlockCoder> coders;
  for (size_t c = 0; c < nch; ++c) coders.emplace_back(h.quant_for(static_cast<int>(c)), channel_kind(h, c));
  BinGrid grid(ModelLayout::instance().total_bins());
  std::vector<Ring> rings = make_rings(h);
  // Contiguous coefficient rows for the Huffman writer, same slots as the ring.
  std::vector<std::array<std::vector<QuantizedBlock>, 2>> qrows(nch);
  for (size_t c = 0; c < nch; ++c) {
    for (auto& r : qrows[c]) r.resize(static_cast<size_t>(rings[c].width));
  }
  if (rows_high_water) {
    // Everything this decoder holds per channel is the two ring slots.
    int held = 0;
    for (size_t c = 0; c < nch; ++c) held = std::max(held, static_cast<int>(qrows[c].size()));
    *rows_high_water = std::max(*rows_high_water, held);
  }

  RangeDecoder dec(src);
  HuffmanScanWriter writer(h, params.scan, params.handover, params.start);
  uint64_t produced = 0;
  walk(
      h, params.start, params.end, rings,
      [&](size_t c, int bx, int y, const BlockContext& ctx, CodedBlock& out) {
        coders[c].decode(dec, grid, ctx, out);
        qrows[c][y & 1][static_cast<size_t>(bx)] = out.q;
      },
      [&](int m) {
        McuRowView view;
        for (size_t c = 0; c < nch; ++c) {
          const int v = h.components[c].mcu_v;
          for (int k = 0; k < v; ++k) view.rows[c][k] = qrows[c][(m * v + k) & 1].data();
        }
        writer.write_mcu_row(view);
        if (m + 1 == params.end && params.finish) writer.finish();
        Bytes& out = writer.output();
        if (!out.empty()) {
          emit(out);
          produced += out.size();
          out.clear();
        }
        if (abort.load(std::memory_order_relaxed)) fail(ErrorCode::kInternal, "aborted");
      });
  return produced;
}

}  // namespace lepton
