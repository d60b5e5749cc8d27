#pragma once

#include <memory>
#include <span>
#include <vector>

#include "synthdag/chem/features.hpp"
#include "synthdag/chem/molecule.hpp"
#include "synthdag/nn/layers.hpp"

namespace synthdag::model {

// Disjoint union of several molecular graphs, ready for one propagation
// pass. Atoms are laid out in canonical-SMILES order so that an embedding
// depends only on the molecule, not on how it was written.
template <class T>
struct MolBatch {
  nn::Mat<T> features;  // atoms x feature dim
  nn::Adjacency<T> adj;
  std::shared_ptr<const nn::SpMat<T>> segment;  // molecules x atoms
  std::size_t num_mols = 0;
};

inline int edge_type(chem::BondOrder o) {
  switch (o) {
    case chem::BondOrder::single: return 0;
    case chem::BondOrder::double_: return 1;
    case chem::BondOrder::triple: return 2;
    case chem::BondOrder::aromatic: return 3;
  }
  return 0;
}

template <class T>
MolBatch<T> make_mol_batch(std::span<const chem::MolPtr> mols) {
  std::vector<chem::MolGraph> graphs;
  graphs.reserve(mols.size());
  std::size_t atoms = 0;
  for (const auto& m : mols) {
    if (!m || m->graph.empty()) throw Error("embed: empty molecule");
    graphs.push_back(chem::parse_smiles(m->smiles));
    atoms += graphs.back().num_atoms();
  }
  MolBatch<T> b;
  b.num_mols = mols.size();
  b.features.resize(static_cast<Eigen::Index>(atoms), chem::kAtomFeatureDim);
  std::array<std::vector<Eigen::Triplet<T>>, nn::kEdgeTypes> trip;
  std::vector<Eigen::Triplet<T>> seg;
  int offset = 0;
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    const auto& g = graphs[k];
    const std::vector<float> f = chem::atom_features(g);
    for (std::size_t i = 0; i < g.num_atoms(); ++i) {
      for (int c = 0; c < chem::kAtomFeatureDim; ++c) {
        b.features(offset + static_cast<int>(i), c) = static_cast<T>(f[i * chem::kAtomFeatureDim + static_cast<std::size_t>(c)]);
      }
      seg.emplace_back(static_cast<int>(k), offset + static_cast<int>(i), T(1));
    }
    for (const auto& bond : g.bonds()) {
      auto& t = trip[static_cast<std::size_t>(edge_type(bond.order))];
      t.emplace_back(offset + bond.a, offset + bond.b, T(1));
      t.emplace_back(offset + bond.b, offset + bond.a, T(1));
    }
    offset += static_cast<int>(g.num_atoms());
  }
  for (int e = 0; e < nn::kEdgeTypes; ++e) {
    auto m = std::make_shared<nn::SpMat<T>>(static_cast<Eigen::Index>(atoms), static_cast<Eigen::Index>(atoms));
    m->setFromTriplets(trip[static_cast<std::size_t>(e)].begin(), trip[static_cast<std::size_t>(e)].end());
    b.adj[static_cast<std::size_t>(e)] = std::move(m);
  }
  auto s = std::make_shared<nn::SpMat<T>>(static_cast<Eigen::Index>(mols.size()), static_cast<Eigen::Index>(atoms));
  s->setFromTriplets(seg.begin(), seg.end());
  b.segment = std::move(s);
  return b;
}

}  // namespace synthdag::model
