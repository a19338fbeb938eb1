#pragma once

#include <cstdint>
#include <string_view>

namespace avatarsim {

using AgentId = std::int32_t;
using FamilyId = std::int32_t;
using OrderId = std::int64_t;
using TradeId = std::int64_t;

// Prices are integer ticks, cash is integer money units, quantities are whole shares.
using Price = std::int64_t;
using Money = std::int64_t;
using Qty = std::int64_t;

// Simulation time in integer microticks.
using SimTime = std::int64_t;

inline constexpr SimTime kMicroticksPerUnit = 1'000'000;

enum class Side : std::uint8_t { Buy, Sell };

constexpr Side opposite(Side s) noexcept { return s == Side::Buy ? Side::Sell : Side::Buy; }

constexpr std::string_view to_string(Side s) noexcept { return s == Side::Buy ? "buy" : "sell"; }

}  // namespace avatarsim
