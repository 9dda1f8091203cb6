"""Writes the scripted gateway fixtures for the 12-page golden deck and the
expected agenda and action queue they should produce.

The expected documents are built here from the intended tree, independently of
the C++ merge, prune and parse code, so the golden files act as an oracle.

    python3 tests/fixtures/make_golden.py
"""

import json
from pathlib import Path

HERE = Path(__file__).resolve().parent
FIXTURES = HERE / "golden"
GOLDEN = HERE.parent / "golden"

LECTURE_ID = "golden"
TITLE = "Introduction to Machine Learning"
K = 3

SLIDE_TITLES = [
    "Welcome to Introduction to Machine Learning",
    "What Is Machine Learning?",
    "Course Roadmap",
    "Linear Regression",
    "Loss Functions and Gradient Descent",
    "Logistic Regression",
    "Decision Boundaries",
    "Clustering with k-Means",
    "Dimensionality Reduction with PCA",
    "Anomaly Detection",
    "Evaluating Models",
    "Summary and Next Steps",
]

DESCRIPTIONS = [
    "Title slide for Introduction to Machine Learning, taught by Dr. Rivera in twelve short lessons.",
    "Defines machine learning as programs that improve with experience by learning patterns from examples.",
    "Roadmap of the course: supervised learning, unsupervised learning, then evaluation and wrap-up.",
    "Linear regression fits a line y = wx + b to predict continuous values such as house prices.",
    "Mean squared error measures fit; gradient descent steps against the gradient to lower the loss.",
    "Logistic regression models class probability, using the sigmoid to map scores into [0, 1].",
    "Decision boundaries mark where a classifier changes its prediction, either linear or non-linear.",
    "k-means groups unlabeled points into k clusters by alternating assignments and centroid updates.",
    "PCA projects data onto directions of maximum variance to compress it while keeping structure.",
    "Anomaly detection flags points that do not fit the learned pattern, as in fraud or fault detection.",
    "Models are evaluated on train, validation and test splits with accuracy, precision and recall.",
    "Recap of supervised and unsupervised ideas with a suggestion to practice on a small project.",
]

SCRIPTS = [
    "Welcome, everyone, to Introduction to Machine Learning. I am Dr. Rivera, and over twelve short lessons "
    "we will meet one idea at a time.",
    "So what is machine learning? Instead of writing rules by hand, we let a program learn patterns from "
    "examples, and it gets better as it sees more of them.",
    "Here is our roadmap. We start with supervised learning, move on to unsupervised learning, and finish "
    "by asking how to evaluate what we built.",
    "Linear regression is our first model. We fit a straight line, y equals w x plus b, and use it to predict "
    "continuous values such as the price of a house.",
    "To choose the line we need a loss. Mean squared error averages the squared gaps, and gradient descent "
    "keeps stepping against the gradient until the loss stops falling.",
    "Logistic regression predicts classes. It turns a score into a probability with the sigmoid, which "
    "always lands between zero and one.",
    "The decision boundary is where the prediction flips from one class to the other. Some boundaries are "
    "straight lines, others curve around the data.",
    "Now the labels disappear. k-means places k centroids, assigns every point to the nearest one, moves "
    "each centroid to the mean of its points, and repeats.",
    "PCA finds the directions along which the data varies most and projects onto them, so we keep the "
    "structure with far fewer numbers.",
    "Anomaly detection learns what normal looks like and flags what does not fit, which is how banks spot "
    "fraud and factories spot faults.",
    "How do we know a model is good? We hold out validation and test data and measure accuracy, precision "
    "and recall on examples the model never saw.",
    "To sum up, we covered supervised and unsupervised learning and how to evaluate models. The best next "
    "step is a small project of your own.",
]

# (section label chain opened at this page, node the chain hangs from)
NEW_SECTIONS = {
    0: (["Getting Started"], "root"),
    3: (["Supervised Learning", "Regression"], "root"),
    5: (["Classification"], "s2"),
    7: (["Unsupervised Learning"], "root"),
    10: (["Wrap-up"], "root"),
}

QUESTIONS = {
    # section id -> generated questions; the first valid one is kept
    "s1": [
        {
            "question": "What does a machine learning program learn from?",
            "question_type": "single_choice",
            "options": ["Rules written by hand", "Examples", "Random guesses", "The compiler"],
            "answer": [1],
            "reference": "we let a program learn patterns from examples",
        },
        {
            "question": "Which topics appear on the course roadmap?",
            "question_type": "multiple_choice",
            "options": ["Supervised learning", "Compilers", "Unsupervised learning", "Databases"],
            "answer": [0, 2],
            "reference": "We start with supervised learning, move on to unsupervised learning",
        },
        {
            "question": "How many lessons does the course have?",
            "question_type": "single_choice",
            "options": ["Six", "Twelve", "Twenty"],
            "answer": [1],
            "reference": "over twelve short lessons",
        },
    ],
    "s2": [
        # Answer letter past the last option: rejected, the next question is kept.
        {
            "question": "Which quantity does gradient descent reduce?",
            "question_type": "single_choice",
            "options": ["The loss", "The learning rate", "The data size", "The number of features"],
            "answer": [5],
            "reference": "gradient descent keeps stepping against the gradient until the loss stops falling",
        },
        {
            "question": "Which of these are supervised learning models?",
            "question_type": "multiple_choice",
            "options": ["Linear regression", "k-means", "Logistic regression", "PCA"],
            "answer": [0, 2],
            "reference": "Linear regression is our first model. Logistic regression predicts classes.",
        },
        {
            "question": "What range does the sigmoid output lie in?",
            "question_type": "single_choice",
            "options": ["Between -1 and 1", "Between 0 and 1", "Any real number"],
            "answer": [1],
            "reference": "which always lands between zero and one",
        },
    ],
    "s5": [
        {
            "question": "What does k-means alternate between?",
            "question_type": "single_choice",
            "options": [
                "Assigning points and moving centroids",
                "Adding and removing features",
                "Training and testing",
                "Labeling and unlabeling",
            ],
            "answer": [0],
            "reference": "assigns every point to the nearest one, moves each centroid to the mean of its points",
        },
        {
            "question": "Which tasks use unsupervised learning?",
            "question_type": "multiple_choice",
            "options": ["Clustering", "Anomaly detection", "House price regression"],
            "answer": [0, 1],
            "reference": "k-means places k centroids; anomaly detection learns what normal looks like",
        },
        {
            "question": "What does PCA keep?",
            "question_type": "single_choice",
            "options": ["Directions of maximum variance", "Only the labels"],
            "answer": [0],
            "reference": "PCA finds the directions along which the data varies most",
        },
    ],
}

LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


# ---- independent tree model ----


def node(node_id, label, kind, page=None):
    n = {"node_id": node_id, "label": label, "kind": kind, "children": []}
    if kind == "leaf":
        n["page_index"] = page
    return n


def leaves(n):
    if n["kind"] == "leaf":
        return [n]
    out = []
    for c in n["children"]:
        out += leaves(c)
    return out


def find(n, node_id):
    if n["node_id"] == node_id:
        return n
    for c in n["children"]:
        hit = find(c, node_id)
        if hit:
            return hit
    return None


def path_to(n, node_id):
    if n["node_id"] == node_id:
        return [n]
    for c in n["children"]:
        p = path_to(c, node_id)
        if p:
            return [n] + p
    return []


def render(n, depth=1):
    lines = ["-" * depth + " " + n["label"]]
    for c in n["children"]:
        lines += render(c, depth + 1)
    return lines


def pruned_lines(root):
    """Outline of the path to the latest leaf with siblings along it collapsed."""
    ls = leaves(root)
    path = path_to(root, ls[-1]["node_id"] if ls else "root")
    on_path = {id(x) for x in path}
    lines = []

    def walk(n, depth):
        lines.append("-" * depth + " " + n["label"])
        if id(n) in on_path and n is not path[-1]:
            for c in n["children"]:
                walk(c, depth + 1)

    walk(root, 1)
    return lines


def depth_of(root, node_id):
    return len(path_to(root, node_id))


def build_expected():
    """Grows the tree page by page; yields (view_lines, reply_lines) per page."""
    root = node("root", TITLE, "section")
    sections = 0
    steps = []
    for i, d in enumerate(DESCRIPTIONS):
        view = pruned_lines(root)
        if i in NEW_SECTIONS:
            chain, attach_id = NEW_SECTIONS[i]
        else:
            chain = []
            last = leaves(root)[-1]
            attach_id = path_to(root, last["node_id"])[-2]["node_id"]
        attach = find(root, attach_id)
        base = depth_of(root, attach_id)
        reply = list(view)
        parent = attach
        for j, label in enumerate(chain):
            sections += 1
            s = node("s%d" % sections, label, "section")
            parent["children"].append(s)
            parent = s
            reply.append("-" * (base + 1 + j) + " " + label)
        parent["children"].append(node("p%d" % i, d, "leaf", i))
        reply.append("-" * (base + 1 + len(chain)) + " " + d)
        steps.append((view, reply))
    return root, steps


# ---- question text ----


def question_text(q):
    kind = "(single choice)" if q["question_type"] == "single_choice" else "(multiple choice)"
    lines = ["Question: %s %s" % (q["question"], kind)]
    for j, opt in enumerate(q["options"]):
        lines.append("%s. %s" % (LETTERS[j], opt))
    lines.append("Answer: " + ", ".join(LETTERS[a] for a in q["answer"]))
    lines.append("Reference Text: " + q["reference"])
    return "\n".join(lines)


def question_block(section):
    qs = QUESTIONS[section]
    if section == "s5":
        # Numbered, bold variant of the layout.
        parts = []
        for n, q in enumerate(qs, 1):
            t = question_text(q).splitlines()
            t[0] = "**%d. %s**" % (n, t[0])
            parts.append("\n".join(t))
        return "\n\n".join(parts)
    return "\n\n".join(question_text(q) for q in qs)


def kept_question(section):
    for q in QUESTIONS[section]:
        if all(0 <= a < len(q["options"]) for a in q["answer"]):
            return q
    raise AssertionError(section)


# ---- fixtures ----


def planner_fixture(steps, root):
    describe = []
    for i, d in enumerate(DESCRIPTIONS):
        window = range(max(0, i - K), i)
        describe.append(
            {
                "text": d,
                "expect": {
                    "images": 1,
                    "tagged": {"context": len(window), "input": 1},
                    "contains": [SLIDE_TITLES[i]] + ["Summary of page %d: %s" % (j, DESCRIPTIONS[j]) for j in window],
                },
            }
        )

    segment = []
    for i, (view, reply) in enumerate(steps):
        upcoming = range(i + 1, min(len(DESCRIPTIONS), i + 1 + K))
        expect = {
            "images": 0,
            "tagged": {"context": len(upcoming), "input": 1},
            "contains": ["Current outline:\n" + "\n".join(view) + "\n\nNew page %d summary: %s" % (i, DESCRIPTIONS[i])]
            + ["Upcoming page %d summary: %s" % (j, DESCRIPTIONS[j]) for j in upcoming],
        }
        good = "\n".join(reply)
        if i == 4:
            # Drops an existing page line: must be rejected and retried.
            bad = "\n".join([line for line in reply if not line.endswith(DESCRIPTIONS[3])])
            segment.append({"text": bad, "expect": expect})
            retry = dict(expect, tagged=dict(expect["tagged"], retry=2))
            segment.append({"text": good, "expect": retry})
        elif i == 8:
            # Depth jump: malformed outline, then a valid reply.
            bad = "- " + TITLE + "\n--- " + DESCRIPTIONS[8]
            segment.append({"text": bad, "expect": expect})
            retry = dict(expect, tagged=dict(expect["tagged"], retry=2))
            segment.append({"text": good, "expect": retry})
        elif i == 6:
            segment.append({"text": "```\n" + good + "\n```", "expect": expect})
        else:
            segment.append({"text": good, "expect": expect})

    readscript = []
    for i, s in enumerate(SCRIPTS):
        window = range(max(0, i - K), i)
        readscript.append(
            {
                "text": s,
                "expect": {
                    "images": 1,
                    "tagged": {"context": len(window), "input": 1},
                    "contains": [SLIDE_TITLES[i]] + ["Script for page %d:\n%s" % (j, SCRIPTS[j]) for j in window],
                },
            }
        )

    askquestion = []
    for sec in ["s1", "s2", "s5"]:
        host = leaves(find(root, sec))[-1]["page_index"]
        window = range(max(0, host - K), host + 1)
        askquestion.append(
            {
                "text": question_block(sec),
                "expect": {
                    "images": 0,
                    "tagged": {"context": len(window), "input": 1},
                    "contains": ["Section: " + find(root, sec)["label"]] + [SCRIPTS[j] for j in window],
                },
            }
        )

    return {
        "scenarios": {
            "describe": describe,
            "segment": segment,
            "readscript": readscript,
            "askquestion": askquestion,
        },
        "expect_all": [{"when": {"profile": "planner"}, "expect": {"profile": "planner"}}],
    }


def expected_documents(root):
    hosts = {}
    for sec in ["s1", "s2", "s5"]:
        hosts[leaves(find(root, sec))[-1]["node_id"]] = kept_question(sec)

    actions = []
    for leaf in leaves(root):
        i = leaf["page_index"]
        own = [
            {"kind": "ShowFile", "value": {"file_id": i}, "origin_leaf": leaf["node_id"]},
            {"kind": "ReadScript", "value": {"script": SCRIPTS[i]}, "origin_leaf": leaf["node_id"]},
        ]
        if leaf["node_id"] in hosts:
            own.append({"kind": "AskQuestion", "value": hosts[leaf["node_id"]], "origin_leaf": leaf["node_id"]})
        leaf["actions"] = own
        actions += own

    def strip(n):
        out = {"node_id": n["node_id"], "label": n["label"], "kind": n["kind"]}
        if n["kind"] == "leaf":
            out["page_index"] = n["page_index"]
            out["actions"] = n["actions"]
        else:
            out["children"] = [strip(c) for c in n["children"]]
        return out

    agenda = {"root": strip(root), "leaf_count": len(leaves(root))}
    queue = {"lecture_id": LECTURE_ID, "revision": 1, "actions": actions}
    return agenda, queue


TEACHER = "I am glad you asked."


def session_fixture():
    say = lambda text: {"type": "say", "text": text}
    cont = {"type": "continue"}
    user = [
        say("Will there be homework in this course?"),  # page 0 script
        cont,
        say("What should I eat for lunch today?"),  # page 1
        cont,
        cont,  # page 2
        {"type": "choose", "options": [0]},  # first question, wrong
        say("How is the line actually chosen?"),  # page 3, ends on terminate
        cont,  # page 4
        say("Can logistic regression handle more than two classes?"),  # page 5
        cont,
        cont,  # page 6
        {"type": "choose", "options": [2, 0]},  # second question, right
        say("Is k picked by hand?"),  # page 7, two bad controller replies
        cont,  # page 8
        cont,  # page 9
        cont,  # skips the third question
        say("Which metric matters most?"),  # page 10
        cont,
        cont,  # page 11
    ]
    controller = [
        "teacher",
        "user",
        "teaching_assistant",
        "user",
        "the narrator",
        "terminate",
        "Teacher.",
        "teaching_assistant",
        "user",
        "hmm, hard to say",
        "???",
        {"text": "teacher", "expect": {"tagged": {"history": 12}}},
        "user",
    ]
    teacher = [
        {
            "text": "Yes, there is a short exercise after each lesson. It keeps the ideas fresh, so let us keep going.",
            "expect": {
                "contains": ["Will there be homework in this course?"],
                "system_contains": [TITLE],
                "tagged": {"input": 1},
            },
        },
        "We try many lines and keep the one with the smallest loss. The next slide shows exactly how.",
        "Yes. The usual trick is one-vs-rest: train one classifier per class and pick the most confident one.",
        "Usually yes, k is chosen by you, often by trying a few values and comparing the results.",
        {
            "text": "It depends on the task. For rare events, precision and recall tell you more than accuracy.",
            "expect": {"contains": ["Which metric matters most?"]},
        },
    ]
    assistant = [
        {
            "text": "Lunch can wait a little. Let us stay with the lesson, the next slide is a good one.",
            "expect": {"contains": ["What should I eat for lunch today?"], "system_contains": ["teaching assistant"]},
        },
        "A small addition: the softmax function generalizes the sigmoid to many classes.",
    ]
    explain = [
        {
            "text": "Not quite. The program learns from examples, not from rules someone wrote by hand.",
            "expect": {
                "system_contains": ["Correct answer: B", "The student chose: A, which is incorrect"],
                "contains": ["What does a machine learning program learn from?"],
            },
        },
        {
            "text": "Exactly right. Both linear and logistic regression learn from labeled examples.",
            "expect": {"system_contains": ["Correct answer: A, C", "The student chose: A, C, which is correct"]},
        },
    ]
    return {
        "gateway": {
            "scenarios": {
                "controller": controller,
                "agent:teacher": teacher,
                "agent:teaching_assistant": assistant,
                "explain": explain,
            },
            "expect_all": [
                {"when": {"profile": "tutor"}, "expect": {"profile": "tutor", "max_tagged": {"history": 12}}},
                {"when": {"profile": "planner"}, "expect": {"profile": "tutor"}},
            ],
        },
        "user": user,
    }


def dump(path, value):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(value, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
    print("wrote", path)


def main():
    root, steps = build_expected()
    dump(FIXTURES / "planner.json", planner_fixture(steps, root))
    dump(FIXTURES / "session.json", session_fixture())
    agenda, queue = expected_documents(root)
    dump(GOLDEN / "agenda.json", agenda)
    dump(GOLDEN / "queue.json", queue)


if __name__ == "__main__":
    main()
