/**
 * Report view: loads the server-rendered text plus its machine-readable
 * draft, exposes the four sections in fixed order with provenance lookups
 * for hover, and exports the text exactly as the server rendered it.
 */

import type { EegDeskApi, ReportDraft } from "./api.js";

export interface SectionView {
  title: string;
  items: Array<{ text: string; provenance: string[] }>;
}

export const SECTION_ORDER = [
  "Basic information",
  "Background activity",
  "Abnormal events",
  "Impression",
] as const;

export class ReportView {
  private reportText = "";
  private draft: ReportDraft | null = null;

  constructor(private readonly api: EegDeskApi) {}

  async load(recordingId: string): Promise<void> {
    const reply = await this.api.report(recordingId);
    this.reportText = reply.report_text;
    const draftArtifact = await this.api.recordingArtifact(
      recordingId,
      reply.draft_artifact_id,
    );
    this.draft = draftArtifact.body as ReportDraft;
  }

  /** The four sections in fixed order, each item carrying provenance ids. */
  sections(): SectionView[] {
    if (!this.draft) {
      return [];
    }
    const basicInfo = Object.entries(this.draft.basic_info)
      .filter(([key]) => key !== "channels" && key !== "warnings")
      .map(([key, value]) => ({
        text: `${key}: ${typeof value === "object" ? JSON.stringify(value) : String(value)}`,
        provenance: this.draft!.basic_info_provenance,
      }));
    return [
      { title: SECTION_ORDER[0], items: basicInfo },
      {
        title: SECTION_ORDER[1],
        items: this.draft.background_activity.map((s) => ({
          text: s.text,
          provenance: s.provenance,
        })),
      },
      {
        title: SECTION_ORDER[2],
        items: this.draft.abnormal_events.map((e) => ({
          text: e.description,
          provenance: e.provenance,
        })),
      },
      {
        title: SECTION_ORDER[3],
        items: this.draft.impression.map((s) => ({
          text: s.text,
          provenance: s.provenance,
        })),
      },
    ];
  }

  /** Tool results behind one statement, for the provenance hover. */
  provenanceDetails(ids: string[]): Array<Record<string, unknown>> {
    if (!this.draft) {
      return [];
    }
    const byId = new Map(this.draft.tool_results.map((tr) => [tr.id, tr]));
    return ids.flatMap((id) => {
      const hit = byId.get(id);
      return hit ? [hit] : [];
    });
  }

  /** The server-rendered report, byte for byte. */
  exportText(): string {
    return this.reportText;
  }
}
