use serde_json::{json, Value};

use super::{ApiSchema, IntentCategory as C, ParamSpec, ParamType as T};

pub const ALIGNMENTS: &[&str] = &["left", "center", "right", "justify"];
pub const CHART_TYPES: &[&str] = &["bar", "line", "pie", "scatter"];
pub const PAGE_NUMBER_FORMATS: &[&str] = &["arabic", "roman", "letter"];
pub const STYLE_CATEGORIES: &[&str] = &["paragraph", "character", "table"];

fn req(name: &'static str, ty: T) -> ParamSpec {
    ParamSpec {
        name,
        ty,
        required: true,
        default: None,
    }
}

fn opt(name: &'static str, ty: T) -> ParamSpec {
    ParamSpec {
        name,
        ty,
        required: false,
        default: None,
    }
}

fn def(name: &'static str, ty: T, value: Value) -> ParamSpec {
    ParamSpec {
        name,
        ty,
        required: false,
        default: Some(value),
    }
}

fn api(
    name: &'static str,
    cats: &[C],
    params: Vec<ParamSpec>,
    description: &'static str,
) -> ApiSchema {
    ApiSchema {
        name,
        intent_categories: cats.to_vec(),
        params,
        description,
    }
}

fn range() -> [ParamSpec; 2] {
    [opt("start", T::Index), opt("end", T::Index)]
}

pub fn standard() -> Vec<ApiSchema> {
    let p = || req("paragraph_index", T::Index);
    let t = || req("table_index", T::Index);
    vec![
        api(
            "add_paragraph",
            &[C::ContentCreation],
            vec![
                req("text", T::Text),
                def("style", T::NonEmptyText, json!("Normal")),
            ],
            "add a new paragraph of text at the end of the document",
        ),
        api(
            "insert_paragraph_at",
            &[C::ContentCreation],
            vec![
                req("index", T::Index),
                req("text", T::Text),
                def("style", T::NonEmptyText, json!("Normal")),
            ],
            "insert a new paragraph of text at a given position",
        ),
        api(
            "delete_paragraph",
            &[C::ContentModification],
            vec![req("index", T::Index)],
            "delete a paragraph from the document",
        ),
        api(
            "edit_paragraph_text",
            &[C::ContentModification],
            vec![req("index", T::Index), req("text", T::Text)],
            "rewrite the text of an existing paragraph",
        ),
        api(
            "replace_text",
            &[C::ContentModification],
            vec![
                req("find", T::NonEmptyText),
                req("replace", T::Text),
                opt("paragraph_index", T::Index),
            ],
            "find and replace text in the document",
        ),
        api(
            "set_alignment",
            &[C::FormatStyleEditing],
            vec![p(), req("alignment", T::Choice(ALIGNMENTS))],
            "set paragraph alignment left center right or justify",
        ),
        api(
            "set_bold",
            &[C::FormatStyleEditing],
            {
                let mut v = vec![p(), def("value", T::Bool, json!(true))];
                v.extend(range());
                v
            },
            "make paragraph text bold",
        ),
        api(
            "set_italic",
            &[C::FormatStyleEditing],
            {
                let mut v = vec![p(), def("value", T::Bool, json!(true))];
                v.extend(range());
                v
            },
            "make paragraph text italic",
        ),
        api(
            "set_font",
            &[C::FormatStyleEditing],
            {
                let mut v = vec![p(), req("font_name", T::NonEmptyText)];
                v.extend(range());
                v
            },
            "change the font name of paragraph text",
        ),
        api(
            "set_font_size",
            &[C::FormatStyleEditing],
            {
                let mut v = vec![p(), req("size_pt", T::PosFloat)];
                v.extend(range());
                v
            },
            "change the font size of paragraph text",
        ),
        api(
            "set_font_color",
            &[C::FormatStyleEditing],
            {
                let mut v = vec![p(), req("color", T::Color)];
                v.extend(range());
                v
            },
            "change the font color of paragraph text",
        ),
        api(
            "set_paragraph_style",
            &[C::FormatStyleEditing, C::DocumentStructureUpdate],
            vec![p(), req("style", T::NonEmptyText)],
            "apply a named style such as a heading to a paragraph",
        ),
        api(
            "set_spacing",
            &[C::FormatStyleEditing],
            vec![
                p(),
                opt("before_pt", T::NonNegFloat),
                opt("after_pt", T::NonNegFloat),
                opt("line", T::PosFloat),
            ],
            "set paragraph spacing before after and line spacing",
        ),
        api(
            "set_indentation",
            &[C::FormatStyleEditing],
            vec![
                p(),
                opt("left_pt", T::Float),
                opt("right_pt", T::Float),
                opt("first_line_pt", T::Float),
            ],
            "set paragraph indentation left right and first line",
        ),
        api(
            "add_table",
            &[C::TableOperation, C::ContentCreation],
            vec![
                req("rows", T::Count),
                req("cols", T::Count),
                def("style", T::NonEmptyText, json!("Table Grid")),
            ],
            "add a table with rows and columns",
        ),
        api(
            "delete_table",
            &[C::TableOperation],
            vec![t()],
            "delete a table from the document",
        ),
        api(
            "add_table_header",
            &[C::TableOperation],
            vec![
                t(),
                req("headers", T::TextList),
                def("row", T::Index, json!(0)),
            ],
            "add header titles to a table row",
        ),
        api(
            "set_cell_text",
            &[C::TableOperation, C::ContentModification],
            vec![
                t(),
                req("row", T::Index),
                req("col", T::Index),
                req("text", T::Text),
            ],
            "fill a table cell with text",
        ),
        api(
            "merge_cell_table",
            &[C::TableOperation],
            vec![
                t(),
                req("row", T::Index),
                def("col", T::Index, json!(0)),
                def("row_span", T::Count, json!(1)),
                def("col_span", T::Count, json!(2)),
            ],
            "merge adjacent table cells into one cell",
        ),
        api(
            "split_cell_table",
            &[C::TableOperation],
            vec![t(), req("row", T::Index), req("col", T::Index)],
            "split a merged table cell back into separate cells",
        ),
        api(
            "set_table_style",
            &[C::TableOperation, C::FormatStyleEditing],
            vec![t(), req("style", T::NonEmptyText)],
            "apply a style to a table",
        ),
        api(
            "set_row_height",
            &[C::TableOperation],
            vec![t(), req("row", T::Index), req("height_pt", T::PosFloat)],
            "set the height of a table row",
        ),
        api(
            "set_col_width",
            &[C::TableOperation],
            vec![t(), req("col", T::Index), req("width_pt", T::PosFloat)],
            "set the width of a table column",
        ),
        api(
            "insert_image",
            &[C::ImageOperation, C::ContentCreation],
            vec![
                p(),
                req("width_pt", T::PosFloat),
                req("height_pt", T::PosFloat),
                opt("offset", T::Index),
            ],
            "insert an image picture into a paragraph",
        ),
        api(
            "resize_image",
            &[C::ImageOperation, C::ChartOperation],
            vec![
                req("image_index", T::Index),
                req("width_pt", T::PosFloat),
                req("height_pt", T::PosFloat),
            ],
            "resize an image or chart",
        ),
        api(
            "delete_image",
            &[C::ImageOperation, C::ChartOperation],
            vec![req("image_index", T::Index)],
            "delete an image or chart from the document",
        ),
        api(
            "add_chart_stub",
            &[C::ChartOperation, C::ImageOperation, C::ContentCreation],
            vec![
                p(),
                def("chart_type", T::Choice(CHART_TYPES), json!("bar")),
                def("series_count", T::Count, json!(1)),
                def("width_pt", T::PosFloat, json!(300.0)),
                def("height_pt", T::PosFloat, json!(200.0)),
            ],
            "insert a chart into a paragraph",
        ),
        api(
            "update_chart_stub",
            &[C::ChartOperation],
            vec![
                req("image_index", T::Index),
                opt("chart_type", T::Choice(CHART_TYPES)),
                opt("series_count", T::Count),
            ],
            "change the type or series count of a chart",
        ),
        api(
            "add_header",
            &[C::DocumentStructureUpdate],
            vec![req("text", T::NonEmptyText)],
            "add a page header",
        ),
        api(
            "add_footer",
            &[C::DocumentStructureUpdate],
            vec![req("text", T::NonEmptyText)],
            "add a page footer",
        ),
        api(
            "add_page_number",
            &[C::DocumentStructureUpdate],
            vec![
                def("format", T::Choice(PAGE_NUMBER_FORMATS), json!("arabic")),
                def("start", T::Count, json!(1)),
            ],
            "add page numbers to the document",
        ),
        api(
            "add_watermark",
            &[C::DocumentStructureUpdate, C::FormatStyleEditing],
            vec![req("text", T::NonEmptyText)],
            "add a text watermark to every page",
        ),
        api(
            "add_toc",
            &[C::DocumentStructureUpdate, C::DocumentLifecycleUpdate],
            vec![def("title", T::NonEmptyText, json!("Table of Contents"))],
            "insert a table of contents at the start of the document",
        ),
        api(
            "add_hyperlink",
            &[C::ContentModification, C::DocumentStructureUpdate],
            {
                let mut v = vec![p(), req("url", T::NonEmptyText)];
                v.extend(range());
                v
            },
            "turn paragraph text into a hyperlink to a url",
        ),
        api(
            "add_bookmark",
            &[C::DocumentStructureUpdate],
            vec![req("name", T::NonEmptyText), p()],
            "add a named bookmark at a paragraph",
        ),
        api(
            "insert_page_break",
            &[C::DocumentStructureUpdate],
            vec![p()],
            "insert a page break before a paragraph",
        ),
        api(
            "insert_line_break",
            &[C::ContentModification],
            vec![p(), opt("offset", T::Index)],
            "insert a line break inside a paragraph",
        ),
        api(
            "define_style",
            &[C::FormatStyleEditing, C::DocumentLifecycleUpdate],
            vec![
                req("name", T::NonEmptyText),
                def("category", T::Choice(STYLE_CATEGORIES), json!("paragraph")),
                def("font_name", T::NonEmptyText, json!("Calibri")),
                def("font_size_pt", T::PosFloat, json!(11.0)),
                def("bold", T::Bool, json!(false)),
                def("italic", T::Bool, json!(false)),
            ],
            "define or redefine a named style",
        ),
        api(
            "save_document",
            &[C::DocumentLifecycleUpdate],
            vec![def("path", T::NonEmptyText, json!("document.json"))],
            "save the document to a file",
        ),
        api(
            "export_state",
            &[C::DocumentLifecycleUpdate],
            vec![],
            "export the current document state as json",
        ),
    ]
}
