// Copyright 2026 The smmusim Authors.
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

#include "smmusim/dts_config.hpp"

#include <cctype>
#include <cstdio>
#include <unordered_map>

#include "smmusim/stream_mapping.hpp"

namespace smmusim
{

  const DtsProperty* DtsNode::find(std::string_view propName) const
  {
    for (const DtsProperty& prop : properties)
      if (prop.name == propName)
        return &prop;
    return nullptr;
  }


  const DtsNode* DtsNode::findNode(std::string_view nodeName) const
  {
    if (name == nodeName)
      return this;
    for (const DtsNode& child : children)
      if (const DtsNode* hit = child.findNode(nodeName))
        return hit;
    return nullptr;
  }


  const DtsNode* DtsNode::findByPhandle(uint32_t handle) const
  {
    if (phandle == handle)
      return this;
    for (const DtsNode& child : children)
      if (const DtsNode* hit = child.findByPhandle(handle))
        return hit;
    return nullptr;
  }


  namespace
  {

    bool isNameChar(char c)
    {
      return std::isalnum(uint8_t(c)) or c == ',' or c == '.' or c == '_' or
             c == '+' or c == '-' or c == '@' or c == '#' or c == '?';
    }


    class Parser
    {
    public:

      explicit Parser(std::string_view text)
        : text_(text)
      { }

      DtsNode parseRoot()
      {
        std::vector<DtsNode> nodes;
        std::vector<DtsProperty> props;

        skipSpace();
        while (not atEnd())
          {
            if (peek() == '/')
              {
                // A bare '/' opens the root node; anything else starting
                // with '/' is a version header or include, which the
                // flattened-source subset does not carry.
                advance();
                skipSpace();
                if (atEnd() or peek() != '{')
                  fail("dts version headers and includes are not supported");
                nodes.push_back(parseNode("/"));
              }
            else
              parseItem(nodes, props);
            skipSpace();
          }

        if (props.empty() and nodes.size() == 1 and nodes.front().name == "/")
          return std::move(nodes.front());

        DtsNode root;
        root.name = "/";
        root.properties = std::move(props);
        root.children = std::move(nodes);
        return root;
      }

    private:

      [[noreturn]] void fail(const std::string& message) const
      {
        throw ParseError(line_, column_, message);
      }

      bool atEnd() const
      { return pos_ >= text_.size(); }

      char peek() const
      { return text_[pos_]; }

      char advance()
      {
        char c = text_[pos_++];
        if (c == '\n')
          {
            ++line_;
            column_ = 1;
          }
        else
          ++column_;
        return c;
      }

      void expect(char c, const char* what)
      {
        if (atEnd() or peek() != c)
          fail(std::string("expected '") + c + "' " + what);
        advance();
      }

      void skipSpace()
      {
        while (not atEnd())
          {
            char c = peek();
            if (std::isspace(uint8_t(c)))
              {
                advance();
                continue;
              }
            if (c == '/' and pos_ + 1 < text_.size())
              {
                if (text_[pos_ + 1] == '/')
                  {
                    while (not atEnd() and peek() != '\n')
                      advance();
                    continue;
                  }
                if (text_[pos_ + 1] == '*')
                  {
                    advance();
                    advance();
                    while (true)
                      {
                        if (atEnd())
                          fail("unterminated comment");
                        if (peek() == '*' and pos_ + 1 < text_.size() and
                            text_[pos_ + 1] == '/')
                          {
                            advance();
                            advance();
                            break;
                          }
                        advance();
                      }
                    continue;
                  }
              }
            break;
          }
      }

      std::string parseName()
      {
        std::string name;
        while (not atEnd() and isNameChar(peek()))
          name += advance();
        if (name.empty())
          fail("expected a name");
        return name;
      }

      /// One node-body or top-level item: an optional label, then a child
      /// node or a property.
      void parseItem(std::vector<DtsNode>& nodes,
                     std::vector<DtsProperty>& props)
      {
        std::string name = parseName();
        skipSpace();
        while (not atEnd() and peek() == ':')
          {
            // Labels are accepted and dropped.
            advance();
            skipSpace();
            name = parseName();
            skipSpace();
          }
        if (atEnd())
          fail("unexpected end of input after name");
        if (peek() == '{')
          nodes.push_back(parseNode(std::move(name)));
        else if (peek() == '=' or peek() == ';')
          props.push_back(parseProperty(std::move(name)));
        else
          fail("expected '{', '=' or ';' after name");
      }

      DtsNode parseNode(std::string name)
      {
        unsigned startLine = line_;
        unsigned startColumn = column_;

        expect('{', "to open node");
        DtsNode node;
        node.name = std::move(name);

        while (true)
          {
            skipSpace();
            if (atEnd())
              fail("unbalanced braces: node never closed");
            if (peek() == '}')
              {
                advance();
                break;
              }
            parseItem(node.children, node.properties);
          }
        skipSpace();
        expect(';', "after node");

        if (const DtsProperty* p = node.find("phandle");
            p and p->kind == DtsProperty::Kind::Cells and not p->cells.empty())
          node.phandle = p->cells.front();
        else if (const DtsProperty* lp = node.find("linux,phandle");
                 lp and lp->kind == DtsProperty::Kind::Cells and
                 not lp->cells.empty())
          node.phandle = lp->cells.front();

        if (node.phandle)
          {
            auto [it, fresh] = phandles_.emplace(*node.phandle,
                                                 node.name);
            if (not fresh)
              {
                // Report at the node that introduced the duplicate.
                line_ = startLine;
                column_ = startColumn;
                fail("duplicate phandle shared by nodes '" + it->second +
                     "' and '" + node.name + "'");
              }
          }
        return node;
      }

      DtsProperty parseProperty(std::string name)
      {
        DtsProperty prop;
        prop.name = std::move(name);

        if (peek() == ';')
          {
            advance();
            prop.kind = DtsProperty::Kind::Empty;
            return prop;
          }

        expect('=', "in property");
        skipSpace();
        size_t valueStart = pos_;
        unsigned valueLine = line_;
        unsigned valueColumn = column_;

        unsigned cellPieces = 0;
        unsigned stringPieces = 0;
        unsigned bytePieces = 0;
        bool rawFallback = false;

        while (true)
          {
            skipSpace();
            if (atEnd())
              fail("unexpected end of input in property value");
            char c = peek();
            if (c == '<')
              {
                parseCells(prop.cells);
                ++cellPieces;
              }
            else if (c == '"')
              {
                prop.strings.push_back(parseString());
                ++stringPieces;
              }
            else if (c == '[')
              {
                parseBytes(prop.bytes);
                ++bytePieces;
              }
            else
              {
                rawFallback = true;
                break;
              }
            skipSpace();
            if (atEnd())
              fail("unexpected end of input in property value");
            if (peek() == ',')
              {
                advance();
                continue;
              }
            if (peek() == ';')
              {
                advance();
                break;
              }
            fail("expected ',' or ';' in property value");
          }

        bool mixed = (cellPieces > 0) + (stringPieces > 0) +
                     (bytePieces > 0) > 1;
        if (rawFallback or mixed)
          {
            prop.kind = DtsProperty::Kind::Raw;
            prop.cells.clear();
            prop.strings.clear();
            prop.bytes.clear();
            prop.raw = captureRaw(valueStart, valueLine, valueColumn);
            return prop;
          }

        if (cellPieces)
          prop.kind = DtsProperty::Kind::Cells;
        else if (bytePieces)
          prop.kind = DtsProperty::Kind::Bytes;
        else if (stringPieces == 1)
          prop.kind = DtsProperty::Kind::String;
        else
          prop.kind = DtsProperty::Kind::StringList;
        return prop;
      }

      /// Unknown value shape: keep everything up to the terminating ';'
      /// verbatim.
      std::string captureRaw(size_t valueStart, unsigned valueLine,
                             unsigned valueColumn)
      {
        pos_ = valueStart;
        line_ = valueLine;
        column_ = valueColumn;
        size_t end = valueStart;
        bool inString = false;
        while (true)
          {
            if (atEnd())
              fail("property value never terminated with ';'");
            char c = advance();
            if (inString)
              {
                if (c == '\\' and not atEnd())
                  advance();
                else if (c == '"')
                  inString = false;
              }
            else if (c == '"')
              inString = true;
            else if (c == ';')
              {
                end = pos_ - 1;
                break;
              }
          }
        std::string raw(text_.substr(valueStart, end - valueStart));
        while (not raw.empty() and std::isspace(uint8_t(raw.back())))
          raw.pop_back();
        return raw;
      }

      void parseCells(std::vector<uint32_t>& cells)
      {
        expect('<', "to open cell list");
        while (true)
          {
            skipSpace();
            if (atEnd())
              fail("malformed cell list: missing '>'");
            if (peek() == '>')
              {
                advance();
                return;
              }
            cells.push_back(parseCell());
          }
      }

      uint32_t parseCell()
      {
        bool hex = false;
        if (peek() == '0' and pos_ + 1 < text_.size() and
            (text_[pos_ + 1] == 'x' or text_[pos_ + 1] == 'X'))
          {
            advance();
            advance();
            hex = true;
          }

        uint64_t value = 0;
        unsigned digits = 0;
        while (not atEnd() and
               (hex ? std::isxdigit(uint8_t(peek()))
                    : std::isdigit(uint8_t(peek()))))
          {
            char c = advance();
            unsigned digit = std::isdigit(uint8_t(c)) ? unsigned(c - '0')
                           : unsigned(std::tolower(uint8_t(c)) - 'a' + 10);
            value = value * (hex ? 16 : 10) + digit;
            ++digits;
            if (value > 0xffff'ffffull)
              fail("malformed cell list: cell exceeds 32 bits");
          }
        if (digits == 0)
          fail("malformed cell list: expected a number");
        if (not atEnd() and isNameChar(peek()))
          fail("malformed cell list: bad digit");
        return uint32_t(value);
      }

      void parseBytes(std::vector<uint8_t>& bytes)
      {
        expect('[', "to open byte list");
        while (true)
          {
            skipSpace();
            if (atEnd())
              fail("malformed byte list: missing ']'");
            if (peek() == ']')
              {
                advance();
                return;
              }
            std::string token;
            while (not atEnd() and std::isxdigit(uint8_t(peek())))
              token += advance();
            if (token.empty() or token.size() % 2 != 0)
              fail("malformed byte list: expected hex digit pairs");
            for (size_t i = 0; i < token.size(); i += 2)
              bytes.push_back(uint8_t(std::stoul(token.substr(i, 2),
                                                 nullptr, 16)));
          }
      }

      std::string parseString()
      {
        expect('"', "to open string");
        std::string out;
        while (true)
          {
            if (atEnd())
              fail("unterminated string");
            char c = advance();
            if (c == '"')
              return out;
            if (c == '\\')
              {
                if (atEnd())
                  fail("unterminated string");
                char esc = advance();
                switch (esc)
                  {
                  case 'n': out += '\n'; break;
                  case 't': out += '\t'; break;
                  case '\\': out += '\\'; break;
                  case '"': out += '"'; break;
                  default: out += esc; break;
                  }
              }
            else
              out += c;
          }
      }

      std::string_view text_;
      size_t pos_ = 0;
      unsigned line_ = 1;
      unsigned column_ = 1;
      std::unordered_map<uint32_t, std::string> phandles_;
    };


    void writeIndent(std::string& out, unsigned depth)
    {
      out.append(depth, '\t');
    }


    void writeProperty(std::string& out, const DtsProperty& prop,
                       unsigned depth)
    {
      writeIndent(out, depth);
      out += prop.name;
      switch (prop.kind)
        {
        case DtsProperty::Kind::Empty:
          break;

        case DtsProperty::Kind::Cells:
          {
            out += " = <";
            bool first = true;
            for (uint32_t cell : prop.cells)
              {
                char buf[16];
                snprintf(buf, sizeof(buf), "%s0x%x", first ? "" : " ", cell);
                out += buf;
                first = false;
              }
            out += '>';
            break;
          }

        case DtsProperty::Kind::String:
        case DtsProperty::Kind::StringList:
          {
            out += " = ";
            bool first = true;
            for (const std::string& s : prop.strings)
              {
                if (not first)
                  out += ", ";
                out += '"';
                for (char c : s)
                  {
                    if (c == '"' or c == '\\')
                      out += '\\';
                    out += c;
                  }
                out += '"';
                first = false;
              }
            break;
          }

        case DtsProperty::Kind::Bytes:
          {
            out += " = [";
            bool first = true;
            for (uint8_t b : prop.bytes)
              {
                char buf[8];
                snprintf(buf, sizeof(buf), "%s%02x", first ? "" : " ", b);
                out += buf;
                first = false;
              }
            out += ']';
            break;
          }

        case DtsProperty::Kind::Raw:
          out += " = ";
          out += prop.raw;
          break;
        }
      out += ";\n";
    }


    void writeNode(std::string& out, const DtsNode& node, unsigned depth)
    {
      writeIndent(out, depth);
      out += node.name;
      out += " {\n";
      for (const DtsProperty& prop : node.properties)
        writeProperty(out, prop, depth + 1);
      for (const DtsNode& child : node.children)
        writeNode(out, child, depth + 1);
      writeIndent(out, depth);
      out += "};\n";
    }


    /// Depth-first search for the first node carrying the given property.
    const DtsNode* findNodeWithProperty(const DtsNode& node,
                                        std::string_view propName)
    {
      if (node.find(propName))
        return &node;
      for (const DtsNode& child : node.children)
        if (const DtsNode* hit = findNodeWithProperty(child, propName))
          return hit;
      return nullptr;
    }

  }


  DtsNode parseDts(std::string_view text)
  {
    return Parser(text).parseRoot();
  }


  std::string writeDts(const DtsNode& root)
  {
    std::string out;
    for (const DtsProperty& prop : root.properties)
      writeProperty(out, prop, 0);
    for (const DtsNode& child : root.children)
      writeNode(out, child, 0);
    return out;
  }


  MasterResolution resolveMasters(const DtsNode& root)
  {
    const DtsNode* smmu = findNodeWithProperty(root, "mmu-masters");
    if (not smmu)
      throw DtsError("no node with an mmu-masters property");

    const DtsProperty* masters = smmu->find("mmu-masters");
    if (masters->kind != DtsProperty::Kind::Cells)
      throw DtsError("mmu-masters must be a cell list");
    if (masters->cells.size() % 2 != 0)
      throw DtsError("mmu-masters must hold (phandle, stream-id) pairs");

    MasterResolution result;
    for (size_t i = 0; i < masters->cells.size(); i += 2)
      {
        uint32_t handle = masters->cells[i];
        uint32_t sid = masters->cells[i + 1];
        if (sid > streamIdMask)
          throw DtsError("stream id exceeds 15 bits in mmu-masters");

        const DtsNode* dev = root.findByPhandle(handle);
        if (not dev)
          {
            char buf[48];
            snprintf(buf, sizeof(buf), "no node with phandle 0x%x", handle);
            throw UnresolvedPhandle(buf);
          }

        if (const DtsProperty* iommus = dev->find("iommus");
            iommus and iommus->kind == DtsProperty::Kind::Cells and
            iommus->cells.size() >= 2 and iommus->cells[1] != sid)
          {
            char buf[144];
            snprintf(buf, sizeof(buf),
                     "%s: iommus stream id 0x%x disagrees with mmu-masters "
                     "0x%x; mmu-masters wins", dev->name.c_str(),
                     iommus->cells[1], sid);
            result.diagnostics.push_back(buf);
          }

        result.bindings.push_back(MasterBinding{ handle, uint16_t(sid) });
      }
    return result;
  }


  bool isChannelEnabled(const DtsNode& node)
  {
    if (const DtsProperty* status = node.find("status"))
      {
        if (status->kind != DtsProperty::Kind::String or
            status->strings.front() != "okay")
          return false;
      }
    return node.find("clock-names") != nullptr and
           node.find("clocks") != nullptr;
  }

}
