// Copyright 2026 the laksa-sim authors. Licensed under the Apache License,
// Version 2.0; you may not use this file except in compliance with the
// License. See http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <vector>

#include "laksa/types.hpp"

namespace laksa {

// Canonical binary encoding: fixed-width fields raw, variable-length fields
// u32-length-prefixed, integers little-endian, field order as in the message
// definitions. Digests are SHA-256 over the full canonical encoding.

inline std::vector<std::uint8_t> vote_signing_bytes(Round round, const Digest& parent,
                                                    Stake stake) {
  ByteWriter w;
  w.i64le(round);
  w.raw(parent);
  w.i64le(stake);
  return w.take();
}

inline std::vector<std::uint8_t> encode_vote(const Vote& v) {
  ByteWriter w;
  w.i64le(v.round);
  w.raw(v.parent_hash);
  w.i64le(v.stake);
  w.raw(v.voter.id);
  w.raw(v.sig);
  return w.take();
}

inline Vote decode_vote(ByteReader& r) {
  Vote v;
  v.round = r.i64le();
  v.parent_hash = r.bytes32();
  v.stake = r.i64le();
  v.voter.id = r.bytes32();
  v.sig = r.bytes32();
  return v;
}

inline Vote decode_vote(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Vote v = decode_vote(r);
  r.expect_done();
  return v;
}

inline std::vector<std::uint8_t> block_signing_bytes(Round round, const Randomness& rand,
                                                     const Digest& parent,
                                                     const std::vector<Digest>& forks,
                                                     const std::vector<Vote>& votes,
                                                     std::span<const std::uint8_t> txs) {
  ByteWriter w;
  w.i64le(round);
  w.raw(rand);
  w.raw(parent);
  w.u32le(static_cast<std::uint32_t>(forks.size()));
  for (const Digest& f : forks) w.raw(f);
  w.u32le(static_cast<std::uint32_t>(votes.size()));
  for (const Vote& v : votes) {
    auto ev = encode_vote(v);
    w.raw(std::span<const std::uint8_t>(ev.data(), ev.size()));
  }
  w.blob(txs);
  return w.take();
}

inline std::vector<std::uint8_t> encode_block(const Block& b) {
  ByteWriter w;
  auto body = block_signing_bytes(b.round, b.rand, b.parent_hash, b.forks, b.votes,
                                  std::span<const std::uint8_t>(b.txs.data(), b.txs.size()));
  w.raw(std::span<const std::uint8_t>(body.data(), body.size()));
  w.raw(b.leader.id);
  w.raw(b.sig);
  return w.take();
}

inline Block decode_block(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Block b;
  b.round = r.i64le();
  b.rand = r.bytes32();
  b.parent_hash = r.bytes32();
  std::uint32_t nf = r.u32le();
  b.forks.reserve(nf);
  for (std::uint32_t i = 0; i < nf; ++i) b.forks.push_back(r.bytes32());
  std::uint32_t nv = r.u32le();
  b.votes.reserve(nv);
  for (std::uint32_t i = 0; i < nv; ++i) b.votes.push_back(decode_vote(r));
  b.txs = r.blob();
  b.leader.id = r.bytes32();
  b.sig = r.bytes32();
  r.expect_done();
  return b;
}

inline std::vector<std::uint8_t> encode_virtual_block(const VirtualBlock& vb) {
  ByteWriter w;
  w.i64le(vb.round);
  w.raw(vb.parent_hash);
  std::vector<Vote> votes = vb.votes;
  canonicalize_votes(votes);
  w.u32le(static_cast<std::uint32_t>(votes.size()));
  for (const Vote& v : votes) {
    auto ev = encode_vote(v);
    w.raw(std::span<const std::uint8_t>(ev.data(), ev.size()));
  }
  return w.take();
}

inline VirtualBlock decode_virtual_block(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  VirtualBlock vb;
  vb.round = r.i64le();
  vb.parent_hash = r.bytes32();
  std::uint32_t nv = r.u32le();
  vb.votes.reserve(nv);
  for (std::uint32_t i = 0; i < nv; ++i) vb.votes.push_back(decode_vote(r));
  r.expect_done();
  return vb;
}

inline Digest digest_of(const Vote& v) {
  auto e = encode_vote(v);
  return Sha256::digest({e.data(), e.size()});
}

inline Digest digest_of(const Block& b) {
  auto e = encode_block(b);
  return Sha256::digest({e.data(), e.size()});
}

inline Digest digest_of(const VirtualBlock& vb) {
  auto e = encode_virtual_block(vb);
  return Sha256::digest({e.data(), e.size()});
}

inline Vote make_vote(const SignatureScheme& scheme, const NodeId& voter, Round round,
                      const Digest& parent, Stake stake) {
  Vote v;
  v.round = round;
  v.parent_hash = parent;
  v.stake = stake;
  v.voter = voter;
  auto body = vote_signing_bytes(round, parent, stake);
  v.sig = scheme.sign(voter, {body.data(), body.size()});
  return v;
}

inline Block make_block(const SignatureScheme& scheme, const NodeId& leader, Round round,
                        const Randomness& rand, const Digest& parent,
                        std::vector<Digest> forks, std::vector<Vote> votes,
                        std::vector<std::uint8_t> txs = {}) {
  Block b;
  b.round = round;
  b.rand = rand;
  b.parent_hash = parent;
  b.forks = std::move(forks);
  b.votes = std::move(votes);
  b.txs = std::move(txs);
  b.leader = leader;
  auto body = block_signing_bytes(b.round, b.rand, b.parent_hash, b.forks, b.votes,
                                  {b.txs.data(), b.txs.size()});
  b.sig = scheme.sign(leader, {body.data(), body.size()});
  return b;
}

inline VirtualBlock make_virtual_block(Round round, const Digest& parent,
                                       std::vector<Vote> votes) {
  VirtualBlock vb;
  vb.round = round;
  vb.parent_hash = parent;
  canonicalize_votes(votes);
  vb.votes = std::move(votes);
  return vb;
}

inline bool verify_vote_signature(const SignatureScheme& scheme, const Vote& v) {
  auto body = vote_signing_bytes(v.round, v.parent_hash, v.stake);
  return scheme.verify(v.voter, {body.data(), body.size()}, v.sig);
}

inline bool verify_block_signature(const SignatureScheme& scheme, const Block& b) {
  auto body = block_signing_bytes(b.round, b.rand, b.parent_hash, b.forks, b.votes,
                                  {b.txs.data(), b.txs.size()});
  return scheme.verify(b.leader, {body.data(), body.size()}, b.sig);
}

}  // namespace laksa
