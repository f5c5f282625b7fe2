//! Evaluation prompt assembly.

pub const TEMPLATE: &str = include_str!("prompt_template.txt");
pub const VIDEO_PLACEHOLDER: &str = "{video_name_escaped}";
pub const PROMPT_PLACEHOLDER: &str = "{prompt_text_escaped}";

/// Doubles double quotes and drops control characters other than space.
pub fn escape(text: &str) -> String {
    text.chars()
        .filter(|c| !c.is_control())
        .flat_map(|c| match c {
            '"' => vec!['"', '"'],
            other => vec![other],
        })
        .collect()
}

/// The template with both placeholders substituted.
pub fn build_prompt(video_name: &str, prompt_text: &str) -> String {
    TEMPLATE
        .replace(VIDEO_PLACEHOLDER, &escape(video_name))
        .replace(PROMPT_PLACEHOLDER, &escape(prompt_text))
}
