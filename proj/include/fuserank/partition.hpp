// Copyright 2026 The fuserank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace fuserank {

// The closed set of knowledge-base partitions. Names are case-sensitive.
enum class Partition : std::uint8_t {
  kBoneAndSoftTissue,
  kCytology,
  kGastrointestinal,
  kHematology,
  kInfectiousDiseases,
  kOralAndHeadNeck,
  kUrinaryAndMaleReproductive,
  kBreast,
  kEndocrine,
  kGeneralComprehensive,
  kHistologyAndEmbryology,
  kNeonatalPediatric,
  kSkinDermatology,
  kCentralNervousSystem,
  kFemaleReproductive,
  kGrossSpecimenSampling,
  kImmunohistochemistry,
  kOphthalmologyOtolaryngology,
  kRespiratory,
};

inline constexpr std::size_t kPartitionCount = 19;

inline constexpr std::array<std::string_view, kPartitionCount> kPartitionNames = {
    "Bone_and_Soft_Tissue",
    "Cytology",
    "Gastrointestinal_Tract_Liver_Gallbladder_Pancreas_Digestive_System",
    "Hematology_Lymphatic_System_and_Bone_Marrow",
    "Infectious_Diseases",
    "Oral_and_Head_Neck",
    "Urinary_and_Male_Reproductive_System",
    "Breast",
    "Endocrine",
    "General_Comprehensive",
    "Histology_and_Embryology",
    "Neonatal_Pediatric_and_Child",
    "Skin_Dermatology",
    "Central_Nervous_System",
    "Female_Reproductive_System",
    "Gross_Specimen_Sampling",
    "Immunohistochemistry_and_Molecular_Pathology",
    "Ophthalmology_Otolaryngology",
    "Trachea_Lung_Pleura_Respiratory_System_and_Mediastinum",
};

constexpr std::string_view partition_name(Partition p) noexcept {
  return kPartitionNames[static_cast<std::size_t>(p)];
}

constexpr std::size_t partition_index(Partition p) noexcept { return static_cast<std::size_t>(p); }

constexpr std::optional<Partition> parse_partition(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kPartitionCount; ++i) {
    if (kPartitionNames[i] == name) return static_cast<Partition>(i);
  }
  return std::nullopt;
}

/// Throws Error(kUnknownPartition) when the name is not an exact match.
Partition require_partition(std::string_view name);

constexpr std::array<Partition, kPartitionCount> all_partitions() noexcept {
  std::array<Partition, kPartitionCount> out{};
  for (std::size_t i = 0; i < kPartitionCount; ++i) out[i] = static_cast<Partition>(i);
  return out;
}

}  // namespace fuserank
