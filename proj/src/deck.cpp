#include <algorithm>
#include <map>
#include <optional>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "slidetutor/error.hpp"
#include "slidetutor/ingest.hpp"
#include "zip_archive.hpp"

namespace slidetutor {

namespace {

namespace pt = boost::property_tree;

std::string_view local_name(std::string_view tag) {
  auto colon = tag.find(':');
  return colon == std::string_view::npos ? tag : tag.substr(colon + 1);
}

pt::ptree parse_xml(const std::string& xml, const std::string& part) {
  std::istringstream in(xml);
  pt::ptree tree;
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw Error(Errc::MalformedArchive, part + ": " + e.message());
  }
  return tree;
}

const pt::ptree* child(const pt::ptree& node, std::string_view name) {
  for (const auto& [tag, sub] : node) {
    if (local_name(tag) == name) return &sub;
  }
  return nullptr;
}

std::optional<std::string> attr(const pt::ptree& node, std::string_view name) {
  auto attrs = node.get_child_optional("<xmlattr>");
  if (!attrs) return std::nullopt;
  for (const auto& [key, value] : *attrs) {
    if (key == name || local_name(key) == name) return value.data();
  }
  return std::nullopt;
}

struct Offset {
  long long top = 0;
  long long left = 0;
};

std::optional<Offset> offset_of(const pt::ptree* xfrm) {
  if (!xfrm) return std::nullopt;
  const pt::ptree* off = child(*xfrm, "off");
  if (!off) return std::nullopt;
  auto x = attr(*off, "x");
  auto y = attr(*off, "y");
  if (!x || !y) return std::nullopt;
  try {
    return Offset{std::stoll(*y), std::stoll(*x)};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void collect_runs(const pt::ptree& node, std::string& out) {
  for (const auto& [tag, sub] : node) {
    auto name = local_name(tag);
    if (name == "t") {
      out += sub.data();
    } else if (name == "br") {
      out += '\n';
    } else if (name != "<xmlattr>") {
      collect_runs(sub, out);
    }
  }
}

void collect_paragraphs(const pt::ptree& node, std::vector<std::string>& blocks) {
  for (const auto& [tag, sub] : node) {
    auto name = local_name(tag);
    if (name == "p") {
      std::string text;
      collect_runs(sub, text);
      text = text::trim(text);
      if (!text.empty()) blocks.push_back(std::move(text));
    } else if (name != "<xmlattr>") {
      collect_paragraphs(sub, blocks);
    }
  }
}

struct ShapeText {
  std::optional<Offset> offset;
  std::vector<std::string> blocks;
};

std::vector<std::string> ordered_blocks(std::vector<ShapeText> shapes);

std::vector<ShapeText> shapes_in(const pt::ptree& tree) {
  std::vector<ShapeText> shapes;
  for (const auto& [tag, node] : tree) {
    auto name = local_name(tag);
    ShapeText shape;
    if (name == "sp") {
      const pt::ptree* sppr = child(node, "spPr");
      shape.offset = offset_of(sppr ? child(*sppr, "xfrm") : nullptr);
      if (const pt::ptree* body = child(node, "txBody")) collect_paragraphs(*body, shape.blocks);
    } else if (name == "grpSp") {
      const pt::ptree* grppr = child(node, "grpSpPr");
      shape.offset = offset_of(grppr ? child(*grppr, "xfrm") : nullptr);
      shape.blocks = ordered_blocks(shapes_in(node));
    } else if (name == "graphicFrame") {
      shape.offset = offset_of(child(node, "xfrm"));
      if (const pt::ptree* graphic = child(node, "graphic")) collect_paragraphs(*graphic, shape.blocks);
    } else {
      // Pictures, connectors and anything else carry no extractable text.
      continue;
    }
    if (!shape.blocks.empty()) shapes.push_back(std::move(shape));
  }
  return shapes;
}

std::vector<std::string> ordered_blocks(std::vector<ShapeText> shapes) {
  bool all_placed = std::all_of(shapes.begin(), shapes.end(),
                                [](const ShapeText& s) { return s.offset.has_value(); });
  if (all_placed) {
    std::stable_sort(shapes.begin(), shapes.end(), [](const ShapeText& a, const ShapeText& b) {
      if (a.offset->top != b.offset->top) return a.offset->top < b.offset->top;
      return a.offset->left < b.offset->left;
    });
  }
  std::vector<std::string> blocks;
  for (auto& s : shapes) {
    for (auto& b : s.blocks) blocks.push_back(std::move(b));
  }
  return blocks;
}

std::string resolve_target(const std::string& target) {
  if (!target.empty() && target.front() == '/') return target.substr(1);
  std::string path = "ppt/" + target;
  // Collapse "dir/../" segments that some writers emit.
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string seg; std::getline(ss, seg, '/');) {
    if (seg == "..") {
      if (!parts.empty()) parts.pop_back();
    } else if (!seg.empty() && seg != ".") {
      parts.push_back(seg);
    }
  }
  return text::join(parts, "/");
}

std::string stem_of(const std::string& part) {
  auto slash = part.find_last_of('/');
  std::string file = slash == std::string::npos ? part : part.substr(slash + 1);
  auto dot = file.find_last_of('.');
  return dot == std::string::npos ? file : file.substr(0, dot);
}

}  // namespace

SlideDeck parse_deck(std::span<const std::uint8_t> archive, std::string_view title) {
  if (text::trim(title).empty()) throw Error(Errc::InvalidRequest, "deck title must be non-empty");

  detail::ZipArchive zip(archive);
  const std::string presentation_part = "ppt/presentation.xml";
  const std::string rels_part = "ppt/_rels/presentation.xml.rels";
  if (!zip.contains(presentation_part) || !zip.contains(rels_part)) {
    throw Error(Errc::MalformedArchive, "missing presentation part");
  }

  std::map<std::string, std::string> targets;
  pt::ptree rels = parse_xml(zip.read(rels_part), rels_part);
  if (const pt::ptree* root = child(rels, "Relationships")) {
    for (const auto& [tag, rel] : *root) {
      if (local_name(tag) != "Relationship") continue;
      auto id = attr(rel, "Id");
      auto target = attr(rel, "Target");
      if (id && target) targets[*id] = resolve_target(*target);
    }
  }

  std::vector<std::string> slide_parts;
  pt::ptree pres = parse_xml(zip.read(presentation_part), presentation_part);
  const pt::ptree* pres_root = child(pres, "presentation");
  if (!pres_root) throw Error(Errc::MalformedArchive, "presentation root element missing");
  if (const pt::ptree* list = child(*pres_root, "sldIdLst")) {
    for (const auto& [tag, sld] : *list) {
      if (local_name(tag) != "sldId") continue;
      // Both the numeric `id` and relationship `r:id` attributes share the local
      // name "id"; the relationship one is the prefixed key.
      std::optional<std::string> rel_id;
      if (auto attrs = sld.get_child_optional("<xmlattr>")) {
        for (const auto& [key, value] : *attrs) {
          if (key != "id" && local_name(key) == "id") rel_id = value.data();
        }
      }
      if (!rel_id || !targets.count(*rel_id)) {
        throw Error(Errc::MalformedArchive, "slide reference without relationship target");
      }
      slide_parts.push_back(targets[*rel_id]);
    }
  }
  if (slide_parts.empty()) throw Error(Errc::EmptyDeck, "archive contains no slides");

  SlideDeck deck;
  deck.deck_id = "deck-" + digest::sha256_hex(archive).substr(0, 16);
  deck.title = text::trim(title);
  for (std::size_t i = 0; i < slide_parts.size(); ++i) {
    const auto& part = slide_parts[i];
    pt::ptree slide = parse_xml(zip.read(part), part);
    Page page;
    page.index = static_cast<int>(i);
    page.page_id = stem_of(part);
    const pt::ptree* sld = child(slide, "sld");
    const pt::ptree* csld = sld ? child(*sld, "cSld") : nullptr;
    const pt::ptree* tree = csld ? child(*csld, "spTree") : nullptr;
    if (!tree) throw Error(Errc::MalformedArchive, part + ": no shape tree");
    page.text_blocks = ordered_blocks(shapes_in(*tree));
    deck.pages.push_back(std::move(page));
  }
  return deck;
}

PageContent page_content(const Page& page) {
  if (!page.image) {
    throw Error(Errc::NotRasterized, "page " + std::to_string(page.index) + " has no image");
  }
  return PageContent{text::join(page.text_blocks, "\n"), *page.image};
}

json deck_to_json(const SlideDeck& deck) {
  json pages = json::array();
  for (const auto& p : deck.pages) {
    json page = {{"index", p.index}, {"page_id", p.page_id}, {"text_blocks", p.text_blocks}};
    if (p.image) {
      page["image"] = {{"path", p.image->path}, {"width", p.image->width}, {"height", p.image->height}};
    } else {
      page["image"] = nullptr;
    }
    pages.push_back(std::move(page));
  }
  return {{"deck_id", deck.deck_id}, {"title", deck.title}, {"pages", std::move(pages)}};
}

SlideDeck deck_from_json(const json& manifest, const std::optional<std::filesystem::path>& base_dir) {
  SlideDeck deck;
  try {
    deck.deck_id = manifest.at("deck_id").get<std::string>();
    deck.title = manifest.at("title").get<std::string>();
    for (const auto& p : manifest.at("pages")) {
      Page page;
      page.index = p.at("index").get<int>();
      page.page_id = p.at("page_id").get<std::string>();
      page.text_blocks = p.at("text_blocks").get<std::vector<std::string>>();
      if (p.contains("image") && !p["image"].is_null()) {
        RasterImage img;
        img.path = p["image"].at("path").get<std::string>();
        img.width = p["image"].at("width").get<int>();
        img.height = p["image"].at("height").get<int>();
        if (base_dir) img.png = fsutil::read_file(*base_dir / img.path);
        page.image = std::move(img);
      }
      deck.pages.push_back(std::move(page));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("deck manifest: ") + e.what());
  }
  for (std::size_t i = 0; i < deck.pages.size(); ++i) {
    if (deck.pages[i].index != static_cast<int>(i)) {
      throw Error(Errc::SchemaViolation, "deck manifest pages are not contiguous from 0");
    }
  }
  return deck;
}

}  // namespace slidetutor
