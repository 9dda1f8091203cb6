#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace slidetutor::prompts {

std::string describe(std::string_view language);
std::string segment();
std::string read_script(std::string_view language);
std::string ask_question();

struct CourseInfo {
  std::string teacher_name = "the instructor";
  std::string course_name;
  std::string school = "the university";
  std::string description;
};

struct RoleLine {
  std::string name;
  std::string description;
};

std::string controller(const std::vector<RoleLine>& roster);
std::string teacher(const CourseInfo& course, std::string_view injected);
std::string teaching_assistant(const CourseInfo& course);

}  // namespace slidetutor::prompts
