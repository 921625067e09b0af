#pragma once

// 5x7 bitmap glyphs for contact-sheet labels. Lowercase letters render with
// the uppercase glyph; anything unknown renders as '?'.

#include <array>
#include <cctype>
#include <cstdint>

namespace lookdev::font {

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;
inline constexpr int kAdvance = kGlyphWidth + 1;

using Glyph = std::array<std::uint8_t, kGlyphHeight>;  // bit 4 = leftmost column

inline const Glyph& glyph(char ch) {
  static constexpr Glyph kDigits[10] = {
      {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}, {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
      {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}, {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
      {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}, {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
      {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
      {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}, {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},
  };
  static constexpr Glyph kLetters[26] = {
      {0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11}, {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},
      {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}, {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C},
      {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}, {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},
      {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}, {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},
      {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}, {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},
      {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},
      {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}, {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},
      {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},
      {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}, {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},
      {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}, {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
      {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},
      {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}, {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},
      {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},
  };
  static constexpr Glyph kSpace = {0, 0, 0, 0, 0, 0, 0};
  static constexpr Glyph kMinus = {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00};
  static constexpr Glyph kPlus = {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00};
  static constexpr Glyph kDot = {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C};
  static constexpr Glyph kComma = {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08};
  static constexpr Glyph kEquals = {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00};
  static constexpr Glyph kColon = {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00};
  static constexpr Glyph kUnderscore = {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F};
  static constexpr Glyph kSlash = {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00};
  static constexpr Glyph kQuestion = {0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04};

  const unsigned char u = static_cast<unsigned char>(ch);
  if (std::isdigit(u)) return kDigits[u - '0'];
  if (std::isalpha(u)) return kLetters[std::toupper(u) - 'A'];
  switch (ch) {
    case ' ': return kSpace;
    case '-': return kMinus;
    case '+': return kPlus;
    case '.': return kDot;
    case ',': return kComma;
    case '=': return kEquals;
    case ':': return kColon;
    case '_': return kUnderscore;
    case '/': return kSlash;
    default: return kQuestion;
  }
}

inline bool pixel(char ch, int col, int row) {
  return (glyph(ch)[static_cast<std::size_t>(row)] >> (kGlyphWidth - 1 - col)) & 1;
}

}  // namespace lookdev::font
