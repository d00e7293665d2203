/**
 * Energy/dissipation decay figure: E(t) on the left axis, D(t) on the
 * right, twin-axis layout.  A run whose energy increases anywhere beyond
 * round-off gets a visible monotonicity-violation annotation.
 */

import { readFileSync, writeFileSync } from 'fs'

import { EnergyRow, MalformedCsvError, parseEnergySeries } from './csv.js'
import { SvgBuilder, extentOf, scale } from './svg.js'

const WIDTH = 640
const HEIGHT = 360
const MARGIN = { left: 64, right: 64, top: 32, bottom: 44 }

export function monotonicityViolations(rows: EnergyRow[]): number {
  if (rows.length < 2) return 0
  const tol = 1e-12 * Math.max(1, Math.abs(rows[0].E))
  let count = 0
  for (let i = 1; i < rows.length; i++) {
    if (rows[i].E > rows[i - 1].E + tol) count++
  }
  return count
}

export function renderEnergySvg(csvText: string, warn: (msg: string) => void): string {
  const rows = parseEnergySeries(csvText)
  const svg = new SvgBuilder(WIDTH, HEIGHT)
  if (rows.length === 0) {
    warn('energy series is empty; writing an empty figure')
    svg.text(20, 60, 'no energy samples', { size: 14, fill: '#888' })
    return svg.render()
  }

  const left = MARGIN.left
  const right = WIDTH - MARGIN.right
  const top = MARGIN.top
  const bottom = HEIGHT - MARGIN.bottom
  const sx = scale(extentOf(rows.map((r) => r.t), 0), left, right)
  const eExt = extentOf(rows.map((r) => r.E))
  const dExt = extentOf(rows.map((r) => r.D))
  const syE = scale(eExt, bottom, top)
  const syD = scale(dExt, bottom, top)

  svg.rect(left, top, right - left, bottom - top, '#999')
  svg.text(WIDTH / 2, 18, 'energy E(t) and dissipation D(t)', {
    size: 13,
    anchor: 'middle',
  })
  svg.text(16, top - 8, 'E', { fill: '#2b6cb0' })
  svg.text(WIDTH - 24, top - 8, 'D', { fill: '#c0392b' })
  svg.text((left + right) / 2, HEIGHT - 12, 't', { anchor: 'middle' })

  // axis labels: endpoints only, the curves carry the story
  svg.text(left - 6, syE(eExt.min) + 3, fmt(eExt.min), { size: 9, anchor: 'end', fill: '#2b6cb0' })
  svg.text(left - 6, syE(eExt.max) + 3, fmt(eExt.max), { size: 9, anchor: 'end', fill: '#2b6cb0' })
  svg.text(right + 6, syD(dExt.min) + 3, fmt(dExt.min), { size: 9, fill: '#c0392b' })
  svg.text(right + 6, syD(dExt.max) + 3, fmt(dExt.max), { size: 9, fill: '#c0392b' })

  svg.polyline(rows.map((r) => [sx(r.t), syE(r.E)] as [number, number]), '#2b6cb0')
  svg.polyline(rows.map((r) => [sx(r.t), syD(r.D)] as [number, number]), '#c0392b')

  const violations = monotonicityViolations(rows)
  if (violations > 0) {
    svg.text(left + 10, top + 18, `energy monotonicity violated at ${violations} steps`, {
      size: 12,
      fill: '#c0392b',
    })
  }
  return svg.render()
}

function fmt(v: number): string {
  return Math.abs(v) >= 1e-3 && Math.abs(v) < 1e4 ? v.toPrecision(3) : v.toExponential(2)
}

export function plotEnergy(csvPath: string, outPath: string): number {
  let text: string
  try {
    text = readFileSync(csvPath, 'utf8')
  } catch (err) {
    console.error(`error: cannot read ${csvPath}: ${(err as Error).message}`)
    return 2
  }
  let svg: string
  try {
    svg = renderEnergySvg(text, (msg) => console.error(`warning: ${msg}`))
  } catch (err) {
    if (err instanceof MalformedCsvError) {
      console.error(`error: malformed energy series: ${err.message}`)
      return 2
    }
    throw err
  }
  writeFileSync(outPath, svg)
  return 0
}
