/**
 * Log-log rate figure: one panel per error metric with the measured points,
 * the fitted power law, dashed reference slopes 1/2 and 1, and a slope
 * annotation.  The annotated slope is the report's fitted value when the
 * slope block carries one, otherwise a least-squares fit of the rows.
 */

import { readFileSync, writeFileSync } from 'fs'

import { MalformedCsvError, logLogSlope, parseRateReport, seriesByMetric } from './csv.js'
import { SvgBuilder, extentOf, scale } from './svg.js'

const PANEL_W = 320
const PANEL_H = 260
const MARGIN = { left: 56, right: 14, top: 28, bottom: 40 }
const COLUMNS = 3

export function renderRatesSvg(csvText: string, warn: (msg: string) => void): string {
  const report = parseRateReport(csvText)
  const series = seriesByMetric(report)
  const metrics = [...series.keys()].filter(
    (m) => series.get(m)!.filter((p) => p.x > 0 && p.y > 0).length >= 2,
  )

  if (metrics.length === 0) {
    warn('rate report has no plottable series; writing an empty figure')
    const svg = new SvgBuilder(420, 120)
    svg.text(20, 60, 'no rate series in report', { size: 14, fill: '#888' })
    return svg.render()
  }

  const cols = Math.min(COLUMNS, metrics.length)
  const rows = Math.ceil(metrics.length / cols)
  const svg = new SvgBuilder(cols * PANEL_W, rows * PANEL_H)

  metrics.forEach((metric, idx) => {
    const x0 = (idx % cols) * PANEL_W
    const y0 = Math.floor(idx / cols) * PANEL_H
    drawPanel(svg, x0, y0, metric, series.get(metric)!, report.slopes.get(metric)?.slope)
  })
  return svg.render()
}

function drawPanel(
  svg: SvgBuilder,
  x0: number,
  y0: number,
  metric: string,
  points: { x: number; y: number }[],
  fittedSlope: number | undefined,
) {
  const usable = points.filter((p) => p.x > 0 && p.y > 0)
  const lx = usable.map((p) => Math.log10(p.x))
  const ly = usable.map((p) => Math.log10(p.y))
  const xExt = extentOf(lx)
  const yExt = extentOf(ly, 0.12)

  const left = x0 + MARGIN.left
  const right = x0 + PANEL_W - MARGIN.right
  const top = y0 + MARGIN.top
  const bottom = y0 + PANEL_H - MARGIN.bottom
  const sx = scale(xExt, left, right)
  const sy = scale(yExt, bottom, top)

  svg.rect(left, top, right - left, bottom - top, '#999')
  svg.text(x0 + PANEL_W / 2, y0 + 16, metric, { size: 12, anchor: 'middle' })

  for (const t of logTicks(xExt)) {
    svg.line(sx(t), bottom, sx(t), bottom + 4, '#555')
    svg.text(sx(t), bottom + 16, `1e${t}`, { size: 9, anchor: 'middle' })
  }
  for (const t of logTicks(yExt)) {
    svg.line(left - 4, sy(t), left, sy(t), '#555')
    svg.text(left - 6, sy(t) + 3, `1e${t}`, { size: 9, anchor: 'end' })
  }

  // dashed reference slopes 1/2 and 1 anchored at the first point
  const anchor = { x: lx[0], y: ly[0] }
  for (const [ref, dash] of [
    [0.5, '6,3'],
    [1.0, '2,3'],
  ] as [number, string][]) {
    const yAt = (x: number) => anchor.y + ref * (x - anchor.x)
    svg.line(sx(xExt.min), sy(yAt(xExt.min)), sx(xExt.max), sy(yAt(xExt.max)), '#aaa', dash)
  }

  const slope = fittedSlope ?? logLogSlope(usable)
  if (slope !== null && slope !== undefined) {
    // fitted line through the log-log centroid
    const mx = lx.reduce((a, b) => a + b, 0) / lx.length
    const my = ly.reduce((a, b) => a + b, 0) / ly.length
    const yAt = (x: number) => my + slope * (x - mx)
    svg.line(sx(xExt.min), sy(yAt(xExt.min)), sx(xExt.max), sy(yAt(xExt.max)), '#c0392b')
    svg.text(left + 8, top + 14, `slope = ${slope.toFixed(2)}`, { size: 11, fill: '#c0392b' })
  }

  for (let i = 0; i < lx.length; i++) {
    svg.circle(sx(lx[i]), sy(ly[i]), 3, '#2b6cb0')
  }
}

function logTicks(ext: { min: number; max: number }): number[] {
  const ticks: number[] = []
  for (let t = Math.ceil(ext.min); t <= Math.floor(ext.max); t++) ticks.push(t)
  return ticks
}

export function plotRates(csvPath: string, outPath: string): number {
  let text: string
  try {
    text = readFileSync(csvPath, 'utf8')
  } catch (err) {
    console.error(`error: cannot read ${csvPath}: ${(err as Error).message}`)
    return 2
  }
  let svg: string
  try {
    svg = renderRatesSvg(text, (msg) => console.error(`warning: ${msg}`))
  } catch (err) {
    if (err instanceof MalformedCsvError) {
      console.error(`error: malformed rate report: ${err.message}`)
      return 2
    }
    throw err
  }
  writeFileSync(outPath, svg)
  return 0
}
