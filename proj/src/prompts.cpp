#include "slidetutor/prompts.hpp"

namespace slidetutor::prompts {

std::string describe(std::string_view language) {
  return "You will see one slide from a lecture: its rendered image and the text found on it. "
         "Earlier slide summaries may follow for continuity. "
         "Write a short summary of this slide in " +
         std::string(language) +
         ". Capture the main point accurately in two or three sentences and nothing else.";
}

std::string segment() {
  return "You maintain the outline of a slide deck as it is read one page at a time.\n"
         "Outline format: one element per line, each line starts with dashes and a space; "
         "the number of dashes is the depth. The first line has one dash and holds the deck title. "
         "Pages are leaf lines holding their summary; sections are lines with children.\n"
         "You receive the current outline (some earlier sections are shown collapsed to their name), "
         "the summary of the new page, and summaries of the next few pages for context.\n"
         "Return the outline with the new page added as the last line. "
         "You may open new sections for it directly above it when the topic changes. "
         "Copy every existing line unchanged and in order; do not add pages for the upcoming summaries.\n"
         "Reply with the outline only, no commentary.";
}

std::string read_script(std::string_view language) {
  return "You write the spoken script a teacher reads while presenting a slide, in " + std::string(language) +
         ". You are the teacher who made the slides and you speak to the class directly. "
         "Use the slide image and its text; the scripts for the previous slides are given so the tone "
         "and flow stay continuous. Explain the page clearly and accurately for a classroom or self-study "
         "audience and avoid jargon unless needed. Reply with the script only.";
}

std::string ask_question() {
  return "Write three multiple-choice questions that check understanding of the teaching script below. "
         "Use this layout for each question, separated by a blank line:\n"
         "Question: <question text> (single choice) or (multiple choice)\n"
         "A. <option>\n"
         "B. <option>\n"
         "C. <option>\n"
         "D. <option>\n"
         "Answer: <letter or letters, e.g. B or A, C>\n"
         "Reference Text: <the passage of the script the question is based on>\n"
         "Use between two and six options. Reply with the questions only.";
}

std::string controller(const std::vector<RoleLine>& roster) {
  std::string out =
      "You direct a classroom conversation and pick who speaks next. The participants are:\n";
  for (const auto& r : roster) out += "- " + r.name + ": " + r.description + "\n";
  out += "- user: the student; pick them when the class should wait for the student.\n"
         "- terminate: pick this when the current topic is settled and the lesson should move on.\n"
         "You will get the recent conversation. Reply with exactly one name from the list above.";
  return out;
}

std::string teacher(const CourseInfo& course, std::string_view injected) {
  std::string out = "You are " + course.teacher_name + ", who teaches the course " + course.course_name + " at " +
                    course.school + ".";
  if (!course.description.empty()) out += " The course covers " + course.description + ".";
  out +=
      "\nAnswer student questions briefly and clearly, then encourage them to keep going with the lesson. "
      "If the student has no question or sounds unsure, move the lesson along with encouragement. "
      "Suggest coming back to very hard questions later. Praise good effort. "
      "Do not give opinions on sensitive topics; refer the student to a human teacher instead. "
      "A teaching assistant is also present in the class.\n"
      "Reply with what you say to the student, in plain text.";
  if (!injected.empty()) out += "\n\n" + std::string(injected);
  return out;
}

std::string teaching_assistant(const CourseInfo& course) {
  return "You are the teaching assistant in the course " + course.course_name +
         ". Speak only when it helps: add a short clarification the teacher did not give, keep the student "
         "on task when the conversation drifts from the lesson, and remind them of class rules when needed. "
         "Do not repeat the teacher. Reply with what you say to the student, in plain text.";
}

}  // namespace slidetutor::prompts
