"""Chat prompt templates for the four extraction tasks.

Each task uses the same recipe: a data-entry-clerk system persona, two worked
examples, a fixed CSV header, and a terminating sentinel line so truncated
responses are detectable.
"""
from __future__ import annotations

SENTINEL = "--- complete ----"

EXPECTED_HEADERS = {
    "counts": ("track", "submitted", "accepted"),
    "roles": ("name", "role"),
    "pc_members": ("name", "track", "role"),
    "deadlines": ("kind", "date"),
}

SYSTEM_TEMPLATE = (
    "You are a data entry clerk and you know how to read some text and extract "
    "the requested information. You always follow the expected output format "
    "shown in the examples precisely. You only extract information in the text "
    "and do not introduce any new facts."
)

COUNTS_HUMAN_TEMPLATE = """Given a preface from a conference proceedings, extract the number of research papers submitted and accepted to each track. Output the results in the CSV format.

Here are two examples:

Preface: The main scientific program of ESWC 2023 contained 41 papers selected out of 167 submissions (98 research, 23 in-use, 46 resource): 19 papers in the research track, 9 in the in-use track, and 13 in the resource track. The overall acceptance rate was 24%.

Output:
track, submitted, accepted
research, 98, 19
in-use, 23, 9
resource, 46, 13
--- complete ----

Preface: The research papers program received 245 full paper submissions, which were first evaluated by the Program Committees of the respective tracks. The review process included evaluation by Program Committee members, discussions to resolve conflicts, and a metareview for each potentially acceptable borderline submission. After this a physical meeting among Track and Conference Chairs was organized to see that comparable evaluation criteria in different tracks had been used and to discuss remaining borderline papers.As a result, 52 research papers were selected to be presented at the conference. The proceedings also include ten PhD symposium papers presented at a separate track preceding the main conference, and 17 demo papers giving a brief description of the system demos that were accepted for presentation in a dedicated session during the conference.

Output:
track, submitted, accepted
research, 245, 52
PhD symposium, - , 10
demo, - , 17
--- complete ----

Now extract the number of research papers submitted and accepted to each track from the following text. Output only the CSV content and "--- complete ----" as the last line.

Preface: {preface_text}"""

ROLES_HUMAN_TEMPLATE = """Given a preface from a conference proceedings, extract the members of the organizing committee and the role each person held. Output the results in the CSV format.

Here are two examples:

Preface: The conference would not have been possible without its organizers. Maria Vidal served as programme chair. The workshops were coordinated by Tom Baker and Ana Costa, our workshop chairs, and Pierre Dumont acted as local chair.

Output:
name, role
Maria Vidal, programme chair
Tom Baker, workshop chair
Ana Costa, workshop chair
Pierre Dumont, local chair
--- complete ----

Preface: Organization. General Chair: Sofia Marino. Programme Chairs: Liam Walsh and Nadia Petrova. Sponsorship was handled by our sponsor chair Hugo Lindt.

Output:
name, role
Sofia Marino, general chair
Liam Walsh, programme chair
Nadia Petrova, programme chair
Hugo Lindt, sponsor chair
--- complete ----

Now extract the organizing committee members and their roles from the following text. Do not include programme committee members who are not chairs. Output only the CSV content and "--- complete ----" as the last line.

Preface: {preface_text}"""

PC_MEMBERS_HUMAN_TEMPLATE = """Given a preface from a conference proceedings, extract the programme committee members together with the track they served and their role, where the role is PC for regular members and SPC for senior members. Output the results in the CSV format.

Here are two examples:

Preface: Senior Program Committee - Research Track: Laura Kim, Daniel Novak. Program Committee - Research Track: Ahmed Saleh, Julia Weber, Marco Rossi.

Output:
name, track, role
Laura Kim, research, SPC
Daniel Novak, research, SPC
Ahmed Saleh, research, PC
Julia Weber, research, PC
Marco Rossi, research, PC
--- complete ----

Preface: The in-use track was served by its own committee. Program Committee (In-Use Track): Grace Ndlovu, Victor Haas.

Output:
name, track, role
Grace Ndlovu, in-use, PC
Victor Haas, in-use, PC
--- complete ----

Now extract the programme committee members with their track and role from the following text. Output only the CSV content and "--- complete ----" as the last line.

Preface: {preface_text}"""

DEADLINES_HUMAN_TEMPLATE = """Given text from a conference website, extract the important dates, categorizing each as one of: abstract submission, paper submission, acceptance notification, camera-ready submission. Output the results in the CSV format. Write every date with the named month, as in "9 May 2023", never in numeric month form.

Here are two examples:

Text: Important Dates. Abstracts are due on 1 March 2022. Full papers must be submitted by 8 March 2022. Authors will be notified on 28 April 2022.

Output:
kind, date
abstract submission, 1 March 2022
paper submission, 8 March 2022
acceptance notification, 28 April 2022
--- complete ----

Text: The camera-ready version of accepted papers is expected by 20 June 2021. Paper submission closes 15 April 2021.

Output:
kind, date
camera-ready submission, 20 June 2021
paper submission, 15 April 2021
--- complete ----

Now extract the important dates from the following text. Only include dates that appear in the text. Output only the CSV content and "--- complete ----" as the last line.

Text: {preface_text}"""

_HUMAN_TEMPLATES = {
    "counts": COUNTS_HUMAN_TEMPLATE,
    "roles": ROLES_HUMAN_TEMPLATE,
    "pc_members": PC_MEMBERS_HUMAN_TEMPLATE,
    "deadlines": DEADLINES_HUMAN_TEMPLATE,
}


class UnknownTask(KeyError):
    pass


def human_template(task: str) -> str:
    try:
        return _HUMAN_TEMPLATES[task]
    except KeyError:
        raise UnknownTask(task) from None
